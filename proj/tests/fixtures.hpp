#pragma once

// Synthetic scenes shared by the unit tests, the acceptance binary and the
// golden regeneration tool.

#include <cmath>
#include <fstream>
#include <limits>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "vss/bench.hpp"
#include "vss/vss.hpp"

namespace vss::fixtures {

/// Rows of '#' (foreground) and '.' (background).
inline Mask mask_from(const std::vector<std::string_view>& rows) {
  Mask m(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()));
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) m(x, y) = rows[y][x] == '#' ? 1 : 0;
  return m;
}

inline DepthImage depth_from_mask(const Mask& m, double z = 1.0) {
  DepthImage d(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m(x, y)) d.set_foreground(x, y, z);
  return d;
}

/// 7x7 frame, 5x5 square at rows/cols 1..5 with a one-pixel hole at (3,3).
inline Mask ring_mask() {
  return mask_from({".......",
                    ".#####.",
                    ".#####.",
                    ".##.##.",
                    ".#####.",
                    ".#####.",
                    "......."});
}

inline Mask random_mask(std::mt19937& rng, int w, int h, double density) {
  std::bernoulli_distribution fg(density);
  Mask m(w, h);
  for (auto& v : m.pixels()) v = fg(rng) ? 1 : 0;
  return m;
}

/// Random blobs with random depths; at least one foreground pixel.
inline DepthImage random_scene(std::mt19937& rng, int w, int h) {
  std::uniform_int_distribution<int> count(1, 6), px(0, w - 1), py(0, h - 1), rad(1, 6);
  std::uniform_real_distribution<double> depth(1.0, 50.0);
  DepthImage d(w, h);
  const int n = count(rng);
  for (int k = 0; k < n; ++k) {
    const int cx = px(rng), cy = py(rng), r = rad(rng);
    const double z0 = depth(rng), tilt = depth(rng) / 50.0;
    for (int y = std::max(0, cy - r); y <= std::min(h - 1, cy + r); ++y)
      for (int x = std::max(0, cx - r); x <= std::min(w - 1, cx + r); ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) d.set_foreground(x, y, z0 + tilt * (x - cx));
  }
  return d;
}

/// 64x64: wall at depth 0.2 on columns 0..26, wall at 0.8 on columns 37..63,
/// a ten-column void between them.
inline DepthImage two_wall_scene() {
  DepthImage d(64, 64);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x <= 26; ++x) d.set_foreground(x, y, 0.2);
    for (int x = 37; x < 64; ++x) d.set_foreground(x, y, 0.8);
  }
  return d;
}

struct RidgeScene {
  DepthImage depth;  // linear view depth
  int center = 0;
  int half_width = 0;
};

/// A vertical tube of radius `half_width` + 0.5 pixels bulging toward the
/// viewer from a plane at depth 10, spanning the full frame height.
inline RidgeScene ridge_scene(int w = 128, int h = 96, int half_width = 6) {
  RidgeScene s{DepthImage(w, h), w / 2, half_width};
  const double r = half_width + 0.5;
  for (int y = 0; y < h; ++y)
    for (int x = s.center - half_width; x <= s.center + half_width; ++x) {
      const double dx = x - s.center;
      s.depth.set_foreground(x, y, 10.0 - std::sqrt(r * r - dx * dx));
    }
  return s;
}

/// Axis-aligned quad at constant z, two triangles.
inline Mesh quad(double x0, double y0, double x1, double y1, double z) {
  Mesh m;
  m.vertices = {{x0, y0, z}, {x1, y0, z}, {x1, y1, z}, {x0, y1, z}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

inline void append(Mesh& dst, const Mesh& src) {
  const auto base = static_cast<std::uint32_t>(dst.vertices.size());
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
  for (const auto& t : src.triangles) dst.triangles.push_back({t.a + base, t.b + base, t.c + base});
}

/// Camera on +z looking at the origin; view depth of a point at world z is 5 - z.
inline Camera front_camera(int w, int h) {
  Camera c;
  c.position = {0.0, 0.0, 5.0};
  c.target = {0.0, 0.0, 0.0};
  c.up = {0.0, 1.0, 0.0};
  c.vfov_deg = 45.0;
  c.near = 0.5;
  c.far = 20.0;
  c.width = w;
  c.height = h;
  return c;
}

/// Two tubes crossing in an X at different depths, both leaving the frame
/// of front_camera(): the silhouette splits the void into four regions.
inline Mesh two_tube_mesh() {
  Mesh m;
  std::vector<double> attr;
  bench::detail::add_tube(m, attr, {{-4.0, -3.0, 0.6}, {4.0, 3.0, -0.6}, 0.3, 0.3, 0.0, 1.0}, 24, 16);
  bench::detail::add_tube(m, attr, {{-4.0, 3.0, -1.0}, {4.0, -3.0, 0.4}, 0.25, 0.35, 1.0, 0.2}, 24, 16);
  m.attribute = attr;
  return m;
}

/// Annulus in a 96x72 depth map whose depth rises around the ring, plus a
/// small disc inside the hole.
inline Image<float> ring_depth_map() {
  Image<float> img(96, 72, std::numeric_limits<float>::infinity());
  const double cx = 47.5, cy = 35.5;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double dx = x - cx, dy = y - cy, r = std::hypot(dx, dy);
      if (r >= 18.0 && r <= 28.0) img(x, y) = static_cast<float>(4.0 + std::atan2(dy, dx) + 0.05 * (r - 18.0));
      if (r <= 5.0) img(x, y) = 9.0f;
    }
  return img;
}

// ------------------------------------------------------------- goldens

inline const std::vector<std::string>& golden_names() {
  static const std::vector<std::string> names{"two_tubes", "reference_small", "ring_depth"};
  return names;
}

/// Writes the mesh and depth-map inputs the golden configs refer to.
inline void write_fixture_inputs(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Mesh tubes = two_tube_mesh();
  {
    std::ofstream obj(dir / "two_tubes.obj");
    write_obj(obj, tubes);
    std::ofstream sc(dir / "two_tubes.scalars");
    sc.precision(9);
    for (double a : *tubes.attribute) sc << a << '\n';
  }
  io::write_file(dir / "ring.pfm", io::encode_pfm(ring_depth_map()));
}

/// Renders one golden config with its output redirected to `out` and
/// returns the PNG bytes written.
inline io::Bytes render_golden(const std::string& name, const std::filesystem::path& fixtures_dir,
                               const std::filesystem::path& out) {
  RenderConfig cfg = parse_config(fixtures_dir / (name + ".json"));
  cfg.output = out;
  render_frame(cfg);
  return io::read_file(out);
}

}  // namespace vss::fixtures
