#pragma once

// Void space surface synthesis: inverse distance weighted interpolation of
// contour depths into every void pixel, and normal reconstruction of the
// resulting height field.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "vss/contours.hpp"
#include "vss/error.hpp"
#include "vss/image.hpp"
#include "vss/math.hpp"
#include "vss/parallel.hpp"
#include "vss/scene.hpp"

namespace vss {

enum class Source : std::uint8_t { vessel, vss, empty };

struct HeightField {
  Image<double> z;
  Image<Source> source;

  HeightField() = default;
  HeightField(int w, int h) : z(w, h, 0.0), source(w, h, Source::empty) {}
  int width() const { return z.width(); }
  int height() const { return z.height(); }
};

/// Depth assigned to pixels of sample-less regions.
inline constexpr double kEmptyRegionDepth = 1.0;

struct IdwParams {
  double p = 2.0;  // power parameter
  int step = 1;    // contour sample stride

  void validate() const {
    if (!(p > 0.0) || !std::isfinite(p)) throw ParameterError("idw.p", "power parameter must be > 0");
    if (step < 1) throw ParameterError("idw.step", "step must be >= 1");
  }
};

namespace detail {

// Structure-of-arrays view of one region's strided sample list. Pixel
// coordinates are exact in float (|d|^2 < 2^24 for frames up to 2896 px).
struct SampleSoA {
  std::vector<float> x, y;
  std::vector<double> z;
};

inline SampleSoA strided_samples(const VoidRegion& region, int step) {
  SampleSoA s;
  for (std::size_t i = 0; i < region.samples.size(); i += static_cast<std::size_t>(step)) {
    s.x.push_back(static_cast<float>(region.samples[i].x));
    s.y.push_back(static_cast<float>(region.samples[i].y));
    s.z.push_back(region.samples[i].depth);
  }
  return s;
}

using v8f = float __attribute__((vector_size(32)));
using v8d = double __attribute__((vector_size(64)));

inline double nearest_sample_depth(double px, double py, const SampleSoA& s) {
  std::size_t best = 0;
  double best_d2 = INFINITY;
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    const double dx = s.x[k] - px, dy = s.y[k] - py;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = k;
    }
  }
  return s.z[best];
}

// p = 2: weights 1/d^2 in single precision (d^2 is exact, the reciprocal is
// correctly rounded), sums in double over eight fixed lanes. The lane order
// is fixed, so results do not depend on threading.
inline double idw_square(int px, int py, const SampleSoA& s) {
  const std::size_t n = s.x.size();
  if (n == 1) return s.z[0];
  const float fx = static_cast<float>(px), fy = static_cast<float>(py);
  const v8f vx = fx - v8f{}, vy = fy - v8f{};
  v8d num{}, den{};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    v8f x, y;
    v8d z;
    std::memcpy(&x, s.x.data() + i, sizeof x);
    std::memcpy(&y, s.y.data() + i, sizeof y);
    std::memcpy(&z, s.z.data() + i, sizeof z);
    const v8f dx = x - vx, dy = y - vy;
    const v8d w = __builtin_convertvector(1.0f / (dx * dx + dy * dy), v8d);
    num += w * z;
    den += w;
  }
  double total_num = 0.0, total_den = 0.0;
  for (int l = 0; l < 8; ++l) {
    total_num += num[l];
    total_den += den[l];
  }
  for (; i < n; ++i) {
    const float dx = s.x[i] - fx, dy = s.y[i] - fy;
    const double w = 1.0f / (dx * dx + dy * dy);
    total_num += w * s.z[i];
    total_den += w;
  }
  // A coincident sample has infinite weight.
  if (!std::isfinite(total_den)) return nearest_sample_depth(px, py, s);
  return total_num / total_den;
}

// General p: double precision weights (d^2)^(-p/2).
inline double idw_power(int px, int py, const SampleSoA& s, double half_p) {
  const std::size_t n = s.x.size();
  if (n == 1) return s.z[0];
  double num[4] = {0.0, 0.0, 0.0, 0.0};
  double den[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i < n; ++i) {
    const double dx = static_cast<double>(s.x[i]) - px;
    const double dy = static_cast<double>(s.y[i]) - py;
    const double w = std::pow(dx * dx + dy * dy, -half_p);
    num[i & 3] += w * s.z[i];
    den[i & 3] += w;
  }
  const double total_den = (den[0] + den[1]) + (den[2] + den[3]);
  const double total_num = (num[0] + num[1]) + (num[2] + num[3]);
  // Coincident sample (infinite weight) or every weight underflowed.
  if (!(total_den > 0.0) || !std::isfinite(total_den)) return nearest_sample_depth(px, py, s);
  return total_num / total_den;
}

inline double idw_at(int px, int py, const SampleSoA& s, double p) {
  return p == 2.0 ? idw_square(px, py, s) : idw_power(px, py, s, 0.5 * p);
}

}  // namespace detail

/// Interpolated depth at pixel (px, py) from a sample list. Weights are
/// 1 / d^p with d the Euclidean distance between pixel centres; a
/// coincident sample returns its depth exactly.
inline double idw_depth(int px, int py, const std::vector<ContourSample>& samples, const IdwParams& params) {
  params.validate();
  VoidRegion r;
  r.samples = samples;
  const auto soa = detail::strided_samples(r, params.step);
  if (soa.x.empty()) return kEmptyRegionDepth;
  return detail::idw_at(px, py, soa, params.p);
}

/// Fills every void pixel with the IDW interpolation of its region's
/// contour samples (every `step`-th sample, starting at index 0). Vessel
/// pixels keep their normalized depth; pixels of sample-less regions are
/// marked empty at kEmptyRegionDepth.
inline HeightField interpolate_void_depth(const DepthImage& depth, const VoidSpaceMap& map, const IdwParams& params) {
  params.validate();
  if (!map.region_id.same_shape(depth.depth)) throw Error("void space map and depth image differ in size");
  const int w = depth.width(), h = depth.height();
  HeightField field(w, h);
  std::vector<detail::SampleSoA> soa;
  soa.reserve(map.regions.size());
  for (const auto& r : map.regions) soa.push_back(detail::strided_samples(r, params.step));

  parallel::for_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const int r = map.region_id(x, y);
      if (r < 0) {
        field.z(x, y) = depth.depth(x, y);
        field.source(x, y) = Source::vessel;
        continue;
      }
      const auto& s = soa[r];
      if (s.x.empty()) {
        field.z(x, y) = kEmptyRegionDepth;
        field.source(x, y) = Source::empty;
        continue;
      }
      field.z(x, y) = detail::idw_at(x, y, s, params.p);
      field.source(x, y) = Source::vss;
    }
  });
  return field;
}

namespace detail {

// Derivative along one axis using only neighbours with the same source
// flag: central when both qualify, one-sided when one does, zero otherwise.
inline double axis_slope(const HeightField& f, int x, int y, int dx, int dy) {
  const Source s = f.source(x, y);
  const bool fwd = f.z.contains(x + dx, y + dy) && f.source(x + dx, y + dy) == s;
  const bool bwd = f.z.contains(x - dx, y - dy) && f.source(x - dx, y - dy) == s;
  if (fwd && bwd) return 0.5 * (f.z(x + dx, y + dy) - f.z(x - dx, y - dy));
  if (fwd) return f.z(x + dx, y + dy) - f.z(x, y);
  if (bwd) return f.z(x, y) - f.z(x - dx, y - dy);
  return 0.0;
}

}  // namespace detail

/// Default relief scale: half the larger frame dimension.
inline double default_relief_scale(int width, int height) { return 0.5 * std::max(width, height); }

/// Normals of the surface (x, y, k*z) in view space (x right, y down,
/// z away from the viewer). A flat field yields (0, 0, -1).
inline Image<Vec3> reconstruct_normals(const HeightField& field, double relief_scale) {
  Image<Vec3> normals(field.width(), field.height());
  parallel::for_rows(field.height(), [&](int y) {
    for (int x = 0; x < field.width(); ++x) {
      const double gx = detail::axis_slope(field, x, y, 1, 0);
      const double gy = detail::axis_slope(field, x, y, 0, 1);
      normals(x, y) = normalize(Vec3{relief_scale * gx, relief_scale * gy, -1.0});
    }
  });
  return normals;
}

/// Screen-space gradient magnitude of z per pixel, same-source neighbours only.
inline Image<double> gradient_magnitude(const HeightField& field) {
  Image<double> g(field.width(), field.height());
  parallel::for_rows(field.height(), [&](int y) {
    for (int x = 0; x < field.width(); ++x) {
      const double gx = detail::axis_slope(field, x, y, 1, 0);
      const double gy = detail::axis_slope(field, x, y, 0, 1);
      g(x, y) = std::hypot(gx, gy);
    }
  });
  return g;
}

inline io::Bytes encode_height_pfm(const HeightField& field) {
  Image<float> out(field.width(), field.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(field.z[i]);
  return io::encode_pfm(out);
}

}  // namespace vss
