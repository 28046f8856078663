#pragma once

// Depth cues on the void space surface and final compositing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vss/error.hpp"
#include "vss/image.hpp"
#include "vss/io.hpp"
#include "vss/math.hpp"
#include "vss/parallel.hpp"
#include "vss/scene.hpp"
#include "vss/synthesis.hpp"

namespace vss {

enum class ColorMapKind { chromadepth, pseudo_chromadepth, mono, none };

/// Vessel-surface colormap for the functional parameter.
enum class ParamMapKind { green_yellow5, green_yellow, neutral };

inline constexpr Rgb kNeutralGray{0.7, 0.7, 0.7};
inline constexpr Rgb kIsoLineColor{0.2, 0.2, 0.2};

struct CueConfig {
  ColorMapKind colormap = ColorMapKind::pseudo_chromadepth;
  int iso_count = 12;
  double iso_width = 1.0;  // pixels
  Vec3 light_dir = normalize(Vec3{-0.4, -0.5, -0.77});  // toward the light, view space
  double ambient = 0.25;
  double diffuse = 0.75;
  double specular = 0.25;
  double shininess = 32.0;
  bool ao_enabled = true;
  double ao_radius = 12.0;  // pixels
  int ao_samples = 16;
  double ao_strength = 0.8;
  double ao_bias = 0.002;  // normalized depth
  double ao_range = 0.2;   // normalized depth beyond which occluders fade
  ParamMapKind param_map = ParamMapKind::green_yellow5;
  Rgb background{1.0, 1.0, 1.0};
  std::optional<double> relief_scale;  // defaults to default_relief_scale()

  void validate() const {
    if (iso_count < 0) throw ParameterError("cues.iso_count", "must be >= 0");
    if (!(iso_width > 0.0)) throw ParameterError("cues.iso_width", "must be > 0");
    if (std::abs(length(light_dir) - 1.0) > 1e-6) throw ParameterError("cues.light_dir", "must be a unit vector");
    if (ambient < 0.0 || diffuse < 0.0 || specular < 0.0)
      throw ParameterError("cues.ambient", "lighting coefficients must be >= 0");
    if (!(shininess > 0.0)) throw ParameterError("cues.shininess", "must be > 0");
    if (!(ao_radius > 0.0)) throw ParameterError("cues.ao_radius", "must be > 0");
    if (ao_enabled && ao_samples < 1) throw ParameterError("cues.ao_samples", "must be >= 1 when AO is enabled");
    if (!(ao_strength >= 0.0 && ao_strength <= 1.0)) throw ParameterError("cues.ao_strength", "must lie in [0,1]");
    if (ao_bias < 0.0) throw ParameterError("cues.ao_bias", "must be >= 0");
    if (!(ao_range > 0.0)) throw ParameterError("cues.ao_range", "must be > 0");
    if (relief_scale && !(*relief_scale > 0.0)) throw ParameterError("cues.relief_scale", "must be > 0");
  }
};

// ----------------------------------------------------------------- colormaps

inline Rgb hsv_to_rgb(double hue_deg, double s, double v) {
  const double h = std::fmod(hue_deg, 360.0) / 60.0;
  const int sector = static_cast<int>(std::floor(h));
  const double f = h - sector;
  const double p = v * (1.0 - s), q = v * (1.0 - s * f), t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

/// Depth to linear RGB; z = 0 is closest. Input is clamped to [0,1].
/// `none` yields the neutral surface colour.
inline Rgb apply_colormap(double z, ColorMapKind kind) {
  z = std::isnan(z) ? 0.0 : std::clamp(z, 0.0, 1.0);
  switch (kind) {
    case ColorMapKind::chromadepth: return hsv_to_rgb(240.0 * z, 1.0, 1.0);
    case ColorMapKind::pseudo_chromadepth: return {1.0 - z, 0.0, z};
    case ColorMapKind::mono: return {1.0 - z, 1.0 - z, 1.0 - z};
    case ColorMapKind::none: return kNeutralGray;
  }
  return kNeutralGray;
}

inline Rgb apply_param_map(double a, ParamMapKind kind) {
  constexpr Rgb green{0.10, 0.55, 0.15};
  constexpr Rgb yellow{0.95, 0.85, 0.10};
  a = std::isnan(a) ? 0.0 : std::clamp(a, 0.0, 1.0);
  switch (kind) {
    case ParamMapKind::green_yellow5: return lerp(green, yellow, std::min(4.0, std::floor(a * 5.0)) / 4.0);
    case ParamMapKind::green_yellow: return lerp(green, yellow, a);
    case ParamMapKind::neutral: return kNeutralGray;
  }
  return kNeutralGray;
}

// ----------------------------------------------------------------- iso-lines

/// Line coverage in [0,1]. Levels sit at (k + 0.5) / iso_count; the screen
/// distance to the nearest level is its depth distance divided by the local
/// gradient magnitude, and the line is an anti-aliased band iso_width
/// pixels wide. Only vss pixels receive lines.
inline Image<double> draw_isolines(const HeightField& field, int iso_count, double iso_width) {
  if (iso_count < 0) throw ParameterError("cues.iso_count", "must be >= 0");
  Image<double> coverage(field.width(), field.height(), 0.0);
  if (iso_count == 0) return coverage;
  const Image<double> grad = gradient_magnitude(field);
  const double n = iso_count;
  parallel::for_rows(field.height(), [&](int y) {
    for (int x = 0; x < field.width(); ++x) {
      if (field.source(x, y) != Source::vss) continue;
      const double z = std::clamp(field.z(x, y), 0.0, 1.0);
      const double k = std::clamp(std::round(z * n - 0.5), 0.0, n - 1.0);
      const double dz = std::abs(z - (k + 0.5) / n);
      const double g = grad(x, y);
      double dist;
      if (g > 0.0)
        dist = dz / g;
      else
        dist = dz == 0.0 ? 0.0 : INFINITY;
      coverage(x, y) = std::clamp(0.5 * iso_width + 0.5 - dist, 0.0, 1.0);
    }
  });
  return coverage;
}

// ------------------------------------------------------------------- shading

/// Blinn-Phong with a viewer along -z; white specular highlight.
inline Rgb shade(const Rgb& base, const Vec3& normal, const CueConfig& cfg) {
  constexpr Vec3 to_viewer{0.0, 0.0, -1.0};
  const double lambert = std::max(0.0, dot(normal, cfg.light_dir));
  const Vec3 half = normalize(cfg.light_dir + to_viewer);
  double spec = 0.0;
  if (cfg.specular > 0.0 && lambert > 0.0) spec = cfg.specular * std::pow(std::max(0.0, dot(normal, half)), cfg.shininess);
  const double k = cfg.ambient + cfg.diffuse * lambert;
  return {base.r * k + spec, base.g * k + spec, base.b * k + spec};
}

// ---------------------------------------------------------- ambient occlusion

struct Offset {
  double dx = 0.0;
  double dy = 0.0;
};

/// Poisson-disk offsets inside the AO radius from a fixed seed. Every
/// offset is at least one pixel from the centre.
inline std::vector<Offset> ao_kernel(int count, double radius, std::uint32_t seed = 0x5eed) {
  std::mt19937 rng(seed);
  auto unit = [&] { return static_cast<double>(rng() >> 8) / 16777216.0; };  // 24-bit uniform in [0,1)
  std::vector<Offset> out;
  if (count <= 0) return out;
  const double min_gap = 0.7 * radius / std::sqrt(static_cast<double>(count));
  const double min_r = std::min(1.0, radius);
  int attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    const double r = min_r + (radius - min_r) * std::sqrt(unit());
    const double a = 2.0 * 3.14159265358979323846 * unit();
    const Offset o{r * std::cos(a), r * std::sin(a)};
    bool ok = ++attempts > 2000 * count;  // give up on spacing if the disk is saturated
    if (!ok) {
      ok = true;
      for (const Offset& q : out)
        if (std::hypot(q.dx - o.dx, q.dy - o.dy) < min_gap) {
          ok = false;
          break;
        }
    }
    if (ok) out.push_back(o);
  }
  return out;
}

/// Screen-space occlusion factor in [0,1] (1 = unoccluded). A kernel sample
/// occludes when its field depth is closer than the centre by more than
/// ao_bias; each contribution is weighted by (1 - distance / radius) and
/// faded when the depth gap exceeds ao_range. Out-of-frame samples clamp to
/// the edge.
inline Image<double> ambient_occlusion(const HeightField& field, const CueConfig& cfg) {
  Image<double> factor(field.width(), field.height(), 1.0);
  if (!cfg.ao_enabled || cfg.ao_strength == 0.0) return factor;
  const auto kernel = ao_kernel(cfg.ao_samples, cfg.ao_radius);
  struct Tap {
    int dx, dy;
    double weight;
  };
  std::vector<Tap> taps;
  double total_weight = 0.0;
  for (const auto& o : kernel) {
    const double wgt = std::max(0.0, 1.0 - std::hypot(o.dx, o.dy) / (cfg.ao_radius + 1.0));
    taps.push_back({static_cast<int>(std::lround(o.dx)), static_cast<int>(std::lround(o.dy)), wgt});
    total_weight += wgt;
  }
  if (total_weight <= 0.0) return factor;
  const int w = field.width(), h = field.height();
  parallel::for_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const double zc = field.z(x, y);
      double occ = 0.0;
      for (const Tap& t : taps) {
        const int sx = std::clamp(x + t.dx, 0, w - 1);
        const int sy = std::clamp(y + t.dy, 0, h - 1);
        const double gap = zc - field.z(sx, sy);
        if (gap <= cfg.ao_bias) continue;
        const double fade = gap <= cfg.ao_range ? 1.0 : cfg.ao_range / gap;
        occ += t.weight * fade;
      }
      factor(x, y) = std::clamp(1.0 - cfg.ao_strength * occ / total_weight, 0.0, 1.0);
    }
  });
  return factor;
}

// --------------------------------------------------------------- compositing

inline std::uint8_t linear_to_srgb8(double c) {
  c = std::clamp(c, 0.0, 1.0);
  const double s = c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
  return static_cast<std::uint8_t>(std::lround(s * 255.0));
}

inline io::Rgba8 to_srgb8(const Rgb& c) { return {linear_to_srgb8(c.r), linear_to_srgb8(c.g), linear_to_srgb8(c.b), 255}; }

/// Unshaded colours: the functional-parameter map (or neutral gray) on
/// vessel pixels, the depth colormap on vss pixels, background elsewhere.
/// With ColorMapKind::none the void is plain background.
inline Image<Rgb> base_colors(const DepthImage& depth, const HeightField& field, const CueConfig& cfg) {
  if (!depth.depth.same_shape(field.z)) throw Error("depth image and height field differ in size");
  Image<Rgb> base(field.width(), field.height(), cfg.background);
  for (int y = 0; y < field.height(); ++y) {
    for (int x = 0; x < field.width(); ++x) {
      switch (field.source(x, y)) {
        case Source::vessel:
          base(x, y) = depth.attribute ? apply_param_map((*depth.attribute)(x, y), cfg.param_map) : kNeutralGray;
          break;
        case Source::vss:
          if (cfg.colormap != ColorMapKind::none) base(x, y) = apply_colormap(field.z(x, y), cfg.colormap);
          break;
        case Source::empty: break;
      }
    }
  }
  return base;
}

struct CueLayers {
  Image<Rgb> base;
  Image<Vec3> normals;
  Image<double> ao;
  Image<double> iso;
};

/// Final sRGB image. Vessel and vss pixels share one light configuration;
/// both are multiplied by the AO factor; iso-lines are blended over the
/// shaded vss layer. Empty pixels (and the void when the colormap is
/// `none`) are flat background.
inline Image<io::Rgba8> composite(const DepthImage& depth, const HeightField& field, const Image<Vec3>& vss_normals,
                                  const CueConfig& cfg, CueLayers* layers = nullptr) {
  cfg.validate();
  if (!depth.depth.same_shape(field.z) || !vss_normals.same_shape(field.z))
    throw Error("layer dimensions differ");
  if (depth.normal && !depth.normal->same_shape(field.z)) throw Error("normal layer dimensions differ");
  if (depth.attribute && !depth.attribute->same_shape(field.z)) throw Error("attribute layer dimensions differ");

  CueLayers local;
  CueLayers& L = layers ? *layers : local;
  L.base = base_colors(depth, field, cfg);
  L.ao = ambient_occlusion(field, cfg);
  L.iso = draw_isolines(field, cfg.iso_count, cfg.iso_width);
  L.normals = vss_normals;
  if (depth.normal)
    for (std::size_t i = 0; i < field.z.size(); ++i)
      if (field.source[i] == Source::vessel) L.normals[i] = (*depth.normal)[i];

  const bool vss_layer = cfg.colormap != ColorMapKind::none;
  Image<io::Rgba8> out(field.width(), field.height());
  parallel::for_rows(field.height(), [&](int y) {
    for (int x = 0; x < field.width(); ++x) {
      const Source s = field.source(x, y);
      Rgb c = L.base(x, y);
      if (s == Source::vessel || (s == Source::vss && vss_layer)) c = shade(c, L.normals(x, y), cfg) * L.ao(x, y);
      if (s == Source::vss) c = lerp(c, kIsoLineColor, L.iso(x, y));
      out(x, y) = to_srgb8(c);
    }
  });
  return out;
}

inline io::Bytes encode_gray_layer(const Image<double>& layer) {
  Image<std::uint8_t> g(layer.width(), layer.height());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = static_cast<std::uint8_t>(std::lround(std::clamp(layer[i], 0.0, 1.0) * 255.0));
  return io::encode_png_gray8(g);
}

}  // namespace vss
