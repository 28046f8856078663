#pragma once

// Timing harness for the void-space stages over camera presets and
// contour step sizes, plus the procedural reference vessel scene.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vss/contours.hpp"
#include "vss/cues.hpp"
#include "vss/pipeline.hpp"
#include "vss/scene.hpp"
#include "vss/synthesis.hpp"

namespace vss::bench {

// ------------------------------------------------------- reference scene

namespace detail {

struct Segment {
  Vec3 a, b;
  double ra, rb;
  double attr_a, attr_b;
};

inline Vec3 any_perpendicular(const Vec3& d) {
  const Vec3 helper = std::abs(d.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  return normalize(cross(d, helper));
}

inline void add_tube(Mesh& m, std::vector<double>& attr, const Segment& s, int sides, int rings) {
  const Vec3 dir = normalize(s.b - s.a);
  const Vec3 u = any_perpendicular(dir);
  const Vec3 v = cross(dir, u);
  const auto base = static_cast<std::uint32_t>(m.vertices.size());
  for (int r = 0; r <= rings; ++r) {
    const double t = static_cast<double>(r) / rings;
    const Vec3 c = s.a + (s.b - s.a) * t;
    const double rad = s.ra + (s.rb - s.ra) * t;
    for (int k = 0; k < sides; ++k) {
      const double a = 2.0 * std::numbers::pi * k / sides;
      m.vertices.push_back(c + (u * std::cos(a) + v * std::sin(a)) * rad);
      attr.push_back(s.attr_a + (s.attr_b - s.attr_a) * t);
    }
  }
  for (int r = 0; r < rings; ++r) {
    for (int k = 0; k < sides; ++k) {
      const std::uint32_t i00 = base + r * sides + k;
      const std::uint32_t i01 = base + r * sides + (k + 1) % sides;
      const std::uint32_t i10 = i00 + sides;
      const std::uint32_t i11 = i01 + sides;
      m.triangles.push_back({i00, i10, i11});
      m.triangles.push_back({i00, i11, i01});
    }
  }
}

inline void add_sphere(Mesh& m, std::vector<double>& attr, const Vec3& c, double radius, double a, int sides) {
  const int stacks = sides / 2;
  const auto base = static_cast<std::uint32_t>(m.vertices.size());
  for (int i = 0; i <= stacks; ++i) {
    const double phi = std::numbers::pi * i / stacks;
    for (int k = 0; k < sides; ++k) {
      const double th = 2.0 * std::numbers::pi * k / sides;
      m.vertices.push_back(c + Vec3{std::sin(phi) * std::cos(th), std::cos(phi), std::sin(phi) * std::sin(th)} * radius);
      attr.push_back(a);
    }
  }
  for (int i = 0; i < stacks; ++i) {
    for (int k = 0; k < sides; ++k) {
      const std::uint32_t i00 = base + i * sides + k;
      const std::uint32_t i01 = base + i * sides + (k + 1) % sides;
      m.triangles.push_back({i00, i00 + sides, i01 + sides});
      m.triangles.push_back({i00, i01 + sides, i01});
    }
  }
}

}  // namespace detail

/// Procedural branching vessel tree: tapered tubes with spherical joints,
/// a per-vertex scalar that decays along the tree, and branches spread in
/// depth so the silhouette encloses several void regions.
inline Mesh make_reference_scene(std::uint32_t seed = 7, int levels = 7) {
  std::mt19937 rng(seed);
  auto unit = [&] { return static_cast<double>(rng() >> 8) / 16777216.0; };
  Mesh mesh;
  std::vector<double> attr;
  struct Node {
    Vec3 pos, dir;
    double length, radius, attr;
    int level;
  };
  std::vector<Node> stack{{{0.0, -1.6, 0.0}, {0.0, 1.0, 0.0}, 0.9, 0.12, 1.0, 0}};
  while (!stack.empty()) {
    const Node n = stack.back();
    stack.pop_back();
    // Slight bend: two half segments with a perturbed mid direction.
    const Vec3 bend = normalize(n.dir + Vec3{unit() - 0.5, unit() - 0.5, unit() - 0.5} * 0.35);
    const Vec3 mid = n.pos + bend * (0.5 * n.length);
    const Vec3 end = mid + n.dir * (0.5 * n.length);
    const double r_end = n.radius * 0.78;
    const double a_end = n.attr * 0.82;
    const double r_mid = 0.5 * (n.radius + r_end), a_mid = 0.5 * (n.attr + a_end);
    detail::add_tube(mesh, attr, {n.pos, mid, n.radius, r_mid, n.attr, a_mid}, 14, 3);
    detail::add_tube(mesh, attr, {mid, end, r_mid, r_end, a_mid, a_end}, 14, 3);
    detail::add_sphere(mesh, attr, mid, r_mid, a_mid, 14);
    detail::add_sphere(mesh, attr, end, r_end, a_end, 14);
    if (n.level + 1 >= levels) continue;
    const Vec3 side = detail::any_perpendicular(n.dir);
    const Vec3 other = cross(n.dir, side);
    const double spread = 0.55 + 0.35 * unit();
    const double twist = 2.0 * std::numbers::pi * unit();
    for (int c = 0; c < 2; ++c) {
      const double ang = (c == 0 ? 1.0 : -1.0) * spread;
      const Vec3 around = side * std::cos(twist) + other * std::sin(twist);
      Vec3 d = normalize(n.dir * std::cos(ang) + around * std::sin(ang));
      d = normalize(Vec3{d.x, d.y * 0.8 + 0.15, d.z * 0.7});
      stack.push_back({end, d, n.length * (0.78 + 0.1 * unit()), r_end * (0.9 + 0.1 * unit()), a_end, n.level + 1});
    }
  }
  double lo = *std::min_element(attr.begin(), attr.end());
  double hi = *std::max_element(attr.begin(), attr.end());
  for (double& a : attr) a = hi > lo ? (a - lo) / (hi - lo) : 0.0;
  mesh.attribute = std::move(attr);
  return mesh;
}

// -------------------------------------------------------------- presets

struct Preset {
  std::string name;
  Camera camera;
};

/// Far: the tree stays inside the frame. Medium: it crosses the border in a
/// few places. Close: it crosses in several.
inline std::vector<Preset> reference_presets(const Mesh& mesh, int width = 1280, int height = 720) {
  const auto [lo, hi] = mesh.bounds();
  auto at = [&](double zoom, Vec3 shift) {
    Camera c = frame_mesh(mesh, width, height, {0.0, 0.0, 1.0}, zoom);
    c.target = c.target + shift;
    c.position = c.position + shift;
    return c;
  };
  const double span = length(hi - lo);
  return {{"far", at(1.15, {0.0, 0.0, 0.0})},
          {"medium", at(2.0, Vec3{0.0, 0.08, 0.0} * span)},
          {"close", at(3.6, Vec3{0.02, 0.18, 0.0} * span)}};
}

/// Number of foreground runs along the frame border (clockwise walk).
inline int border_crossings(const Mask& mask) {
  std::vector<std::uint8_t> ring;
  const int w = mask.width(), h = mask.height();
  for (int x = 0; x < w; ++x) ring.push_back(mask(x, 0));
  for (int y = 1; y < h; ++y) ring.push_back(mask(w - 1, y));
  for (int x = w - 2; x >= 0; --x) ring.push_back(mask(x, h - 1));
  for (int y = h - 2; y >= 1; --y) ring.push_back(mask(0, y));
  int runs = 0;
  bool all = true;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const bool cur = ring[i] != 0;
    const bool prev = ring[(i + ring.size() - 1) % ring.size()] != 0;
    if (cur && !prev) ++runs;
    all = all && cur;
  }
  return all ? 1 : runs;
}

// ------------------------------------------------------------ benchmark

struct StepTiming {
  int step = 1;
  double median_ms = 0.0;
  double iqr_ms = 0.0;
  double interp_median_ms = 0.0;
  double interp_iqr_ms = 0.0;
  bool noisy = false;  // IQR / median above 25%
};

struct PresetReport {
  std::string name;
  std::size_t regions = 0;
  std::size_t max_samples = 0;
  int border_crossings = 0;
  std::string warning;
  std::vector<StepTiming> steps;
};

struct BenchReport {
  std::vector<PresetReport> presets;
  int width = 0, height = 0, repeats = 0;
  double p = 2.0;

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& pr : presets) {
      nlohmann::json steps = nlohmann::json::object();
      for (const auto& s : pr.steps)
        steps[std::to_string(s.step)] = {{"median_ms", s.median_ms},
                                         {"iqr_ms", s.iqr_ms},
                                         {"interp_median_ms", s.interp_median_ms},
                                         {"interp_iqr_ms", s.interp_iqr_ms},
                                         {"noisy", s.noisy}};
      j[pr.name] = {{"regions", pr.regions},
                    {"max_samples", pr.max_samples},
                    {"border_crossings", pr.border_crossings},
                    {"steps", steps}};
      if (!pr.warning.empty()) j[pr.name]["warning"] = pr.warning;
    }
    return j;
  }
};

struct Quartiles {
  double median = 0.0;
  double iqr = 0.0;
};

/// Linear-interpolated quartiles of a sample.
inline Quartiles quartiles(std::vector<double> v) {
  if (v.empty()) return {};
  std::sort(v.begin(), v.end());
  auto q = [&](double f) {
    const double pos = f * (v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double t = pos - i;
    return i + 1 < v.size() ? v[i] * (1.0 - t) + v[i + 1] * t : v[i];
  };
  return {q(0.5), q(0.75) - q(0.25)};
}

struct BenchOptions {
  std::vector<int> steps{1, 3, 5};
  int repeats = 5;
  double p = 2.0;
  CueConfig cues;
};

struct TimedRun {
  double total_ms = 0.0;
  double interp_ms = 0.0;
  RegionStats stats;
};

/// One timed pass over the void-space stages starting from a depth buffer
/// (values in [0,1] as a GPU would hold them).
inline TimedRun time_vss_stages(const DepthImage& ndc, const Camera& cam, const IdwParams& idw, const CueConfig& cues) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const DepthImage lin = linearize_depth_image(ndc, cam.near, cam.far);
  const DepthImage norm = normalize_depth(lin);
  const Mask mask = foreground_mask(norm);
  const VoidSpaceMap voids = label_void_spaces(mask, trace_contours(mask), norm);
  const auto ti0 = clock::now();
  const HeightField field = interpolate_void_depth(norm, voids, idw);
  const auto ti1 = clock::now();
  const double k = cues.relief_scale.value_or(default_relief_scale(norm.width(), norm.height()));
  const auto image = composite(norm, field, reconstruct_normals(field, k), cues);
  const auto t1 = clock::now();
  (void)image;
  return {std::chrono::duration<double, std::milli>(t1 - t0).count(),
          std::chrono::duration<double, std::milli>(ti1 - ti0).count(), region_stats(voids)};
}

/// Median wall-clock per preset and step; rasterization is excluded.
/// Far presets that touch the border, and medium/close presets that do
/// not, are reported with a warning but still measured.
inline BenchReport run_benchmark(const Mesh& mesh, const std::vector<Preset>& presets, const BenchOptions& opts) {
  BenchReport report;
  report.repeats = opts.repeats;
  report.p = opts.p;
  for (const Preset& preset : presets) {
    report.width = preset.camera.width;
    report.height = preset.camera.height;
    const DepthImage linear = rasterize(mesh, preset.camera);
    const DepthImage ndc = to_ndc_depth_image(linear, preset.camera.near, preset.camera.far);
    PresetReport pr;
    pr.name = preset.name;
    pr.border_crossings = border_crossings(foreground_mask(linear));
    if (preset.name == "far" && pr.border_crossings != 0)
      pr.warning = "far preset intersects the image border";
    else if (preset.name != "far" && pr.border_crossings == 0)
      pr.warning = preset.name + " preset does not intersect the image border";
    for (int step : opts.steps) {
      std::vector<double> total, interp;
      RegionStats rs;
      for (int r = 0; r < std::max(1, opts.repeats); ++r) {
        const TimedRun run = time_vss_stages(ndc, preset.camera, IdwParams{opts.p, step}, opts.cues);
        total.push_back(run.total_ms);
        interp.push_back(run.interp_ms);
        rs = run.stats;
      }
      pr.regions = rs.region_count;
      pr.max_samples = rs.max_samples;
      const Quartiles qt = quartiles(total), qi = quartiles(interp);
      StepTiming st{step, qt.median, qt.iqr, qi.median, qi.iqr, false};
      st.noisy = opts.repeats >= 5 && qt.median > 0.0 && qt.iqr / qt.median > 0.25;
      pr.steps.push_back(st);
    }
    report.presets.push_back(std::move(pr));
  }
  return report;
}

// ------------------------------------------------------ step artifacts

struct StepDeviation {
  int step = 1;
  double mean_abs = 0.0;
  double max_abs = 0.0;
};

/// Height-field deviation of each step against step 1, over vss pixels.
inline std::vector<StepDeviation> compare_step_artifacts(const DepthImage& linear_depth, const std::vector<int>& steps,
                                                         double p = 2.0) {
  const DepthImage norm = normalize_depth(linear_depth);
  const Mask mask = foreground_mask(norm);
  const VoidSpaceMap voids = label_void_spaces(mask, trace_contours(mask), norm);
  const HeightField reference = interpolate_void_depth(norm, voids, IdwParams{p, 1});
  std::vector<StepDeviation> out;
  for (int step : steps) {
    const HeightField f = step == 1 ? reference : interpolate_void_depth(norm, voids, IdwParams{p, step});
    StepDeviation d{step, 0.0, 0.0};
    std::size_t n = 0;
    for (std::size_t i = 0; i < f.z.size(); ++i) {
      if (f.source[i] != Source::vss) continue;
      const double e = std::abs(f.z[i] - reference.z[i]);
      d.mean_abs += e;
      d.max_abs = std::max(d.max_abs, e);
      ++n;
    }
    if (n) d.mean_abs /= static_cast<double>(n);
    out.push_back(d);
  }
  return out;
}

inline nlohmann::json to_json(const std::vector<StepDeviation>& devs) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& d : devs) j[std::to_string(d.step)] = {{"mean_abs", d.mean_abs}, {"max_abs", d.max_abs}};
  return j;
}

}  // namespace vss::bench
