#pragma once

// Border following with topological hierarchy (Suzuki & Abe) on an
// 8-connected foreground / 4-connected background, and labeling of the
// background into void regions with their bounding contour samples.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "vss/image.hpp"
#include "vss/io.hpp"
#include "vss/scene.hpp"

namespace vss {

struct Pixel {
  int x = 0;
  int y = 0;
  bool operator==(const Pixel&) const = default;
  auto operator<=>(const Pixel&) const = default;
};

enum class ContourKind { outer, hole };

struct Contour {
  int id = 0;
  ContourKind kind = ContourKind::outer;
  std::optional<int> parent;
  std::vector<Pixel> pixels;  // traversal order; a pixel may repeat on thin structures
};

/// Foreground mask: nonzero = vessel.
using Mask = Image<std::uint8_t>;

inline Mask foreground_mask(const DepthImage& img) {
  Mask m(img.width(), img.height());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = img.background[i] ? 0 : 1;
  return m;
}

namespace detail {

// Neighbour offsets in counter-clockwise order (as displayed, rows growing
// downward), starting east.
inline constexpr std::array<int, 8> kDx{1, 1, 0, -1, -1, -1, 0, 1};
inline constexpr std::array<int, 8> kDy{0, -1, -1, -1, 0, 1, 1, 1};

inline int direction_of(int dx, int dy) {
  for (int d = 0; d < 8; ++d)
    if (kDx[d] == dx && kDy[d] == dy) return d;
  return -1;
}

}  // namespace detail

/// Traces every outer and hole border in raster-scan discovery order.
/// Contour ids are indices into the returned vector. Borders whose parent
/// would be the image frame have no parent.
inline std::vector<Contour> trace_contours(const Mask& mask) {
  using detail::kDx;
  using detail::kDy;
  const int w = mask.width() + 2;
  const int h = mask.height() + 2;
  // Padded label image. 1 = unvisited foreground, +/-nbd = border marks.
  std::vector<int> f(static_cast<std::size_t>(w) * h, 0);
  auto at = [&](int x, int y) -> int& { return f[static_cast<std::size_t>(y) * w + x]; };
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) at(x + 1, y + 1) = mask(x, y) ? 1 : 0;

  std::vector<Contour> contours;
  // Border number n maps to contours[n - 2]; n = 1 is the frame (a hole).
  auto kind_of = [&](int nbd) { return nbd == 1 ? ContourKind::hole : contours[nbd - 2].kind; };
  auto parent_of = [&](int nbd) -> std::optional<int> {
    return nbd == 1 ? std::nullopt : contours[nbd - 2].parent;
  };

  int nbd = 1;
  for (int y = 1; y < h - 1; ++y) {
    int lnbd = 1;
    for (int x = 1; x < w - 1; ++x) {
      const int v = at(x, y);
      if (v == 0) continue;
      int from_dx = 0;
      ContourKind kind;
      if (v == 1 && at(x - 1, y) == 0) {
        kind = ContourKind::outer;
        from_dx = -1;
      } else if (v >= 1 && at(x + 1, y) == 0) {
        kind = ContourKind::hole;
        from_dx = 1;
        if (v > 1) lnbd = v;
      } else {
        if (v != 1) lnbd = std::abs(v);
        continue;
      }

      ++nbd;
      Contour c;
      c.id = nbd - 2;
      c.kind = kind;
      const ContourKind prev_kind = kind_of(lnbd);
      if (kind == ContourKind::outer)
        c.parent = prev_kind == ContourKind::outer ? parent_of(lnbd) : (lnbd == 1 ? std::nullopt : std::optional<int>(lnbd - 2));
      else
        c.parent = prev_kind == ContourKind::outer ? std::optional<int>(lnbd - 2) : parent_of(lnbd);

      // Clockwise search around the start pixel for the first nonzero neighbour.
      const int start_dir = detail::direction_of(from_dx, 0);
      int found = -1;
      for (int k = 0; k < 8; ++k) {
        const int d = (start_dir - k + 8) % 8;
        if (at(x + kDx[d], y + kDy[d]) != 0) {
          found = d;
          break;
        }
      }
      if (found < 0) {
        at(x, y) = -nbd;
        c.pixels.push_back({x - 1, y - 1});
      } else {
        const int x1 = x + kDx[found], y1 = y + kDy[found];
        int x2 = x1, y2 = y1;  // previous pixel
        int x3 = x, y3 = y;    // current pixel
        for (;;) {
          c.pixels.push_back({x3 - 1, y3 - 1});
          // Counter-clockwise search around (x3,y3) starting after (x2,y2).
          const int back = detail::direction_of(x2 - x3, y2 - y3);
          bool east_examined_zero = false;
          int x4 = 0, y4 = 0;
          for (int k = 1; k <= 8; ++k) {
            const int d = (back + k) % 8;
            const int nx = x3 + kDx[d], ny = y3 + kDy[d];
            if (at(nx, ny) != 0) {
              x4 = nx;
              y4 = ny;
              break;
            }
            if (d == 0) east_examined_zero = true;
          }
          if (east_examined_zero)
            at(x3, y3) = -nbd;
          else if (at(x3, y3) == 1)
            at(x3, y3) = nbd;
          if (x4 == x && y4 == y && x3 == x1 && y3 == y1) break;
          x2 = x3;
          y2 = y3;
          x3 = x4;
          y3 = y4;
        }
      }
      contours.push_back(std::move(c));
      if (at(x, y) != 1) lnbd = std::abs(at(x, y));
    }
  }
  return contours;
}

struct ContourSample {
  int x = 0;
  int y = 0;
  double depth = 0.0;
  bool operator==(const ContourSample&) const = default;
};

struct VoidRegion {
  int id = 0;
  std::vector<int> contour_ids;  // contours contributing at least one sample
  std::vector<ContourSample> samples;
  std::size_t pixel_count = 0;
  bool touches_edge = false;
  /// True when no vessel contour bounds the region (e.g. an empty frame).
  bool empty() const { return samples.empty(); }
};

struct VoidSpaceMap {
  Image<int> region_id;  // -1 on foreground
  std::vector<VoidRegion> regions;
  std::vector<Contour> contours;
};

/// 4-connected labeling of background pixels in raster order.
inline Image<int> label_background(const Mask& mask, int* count = nullptr) {
  Image<int> labels(mask.width(), mask.height(), -1);
  int next = 0;
  std::vector<Pixel> stack;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask(x, y) || labels(x, y) >= 0) continue;
      const int id = next++;
      labels(x, y) = id;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        const std::array<Pixel, 4> nb{{{p.x + 1, p.y}, {p.x - 1, p.y}, {p.x, p.y + 1}, {p.x, p.y - 1}}};
        for (const Pixel& q : nb) {
          if (!mask.contains(q.x, q.y) || mask(q.x, q.y) || labels(q.x, q.y) >= 0) continue;
          labels(q.x, q.y) = id;
          stack.push_back(q);
        }
      }
    }
  }
  if (count) *count = next;
  return labels;
}

/// Assigns every background pixel to a 4-connected void region and gathers,
/// per region, the contour pixels lying on its boundary (4-adjacent to one
/// of its pixels) with their normalized depth. Samples follow contour id
/// order, then traversal order; each pixel appears at most once per region.
/// The image edge bounds regions but contributes no samples.
inline VoidSpaceMap label_void_spaces(const Mask& mask, std::vector<Contour> contours, const DepthImage& depth) {
  VoidSpaceMap map;
  int count = 0;
  map.region_id = label_background(mask, &count);
  map.regions.resize(count);
  for (int r = 0; r < count; ++r) map.regions[r].id = r;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const int r = map.region_id(x, y);
      if (r < 0) continue;
      auto& region = map.regions[r];
      ++region.pixel_count;
      if (x == 0 || y == 0 || x == mask.width() - 1 || y == mask.height() - 1) region.touches_edge = true;
    }
  }

  std::unordered_set<std::uint64_t> seen;
  for (const Contour& c : contours) {
    for (const Pixel& p : c.pixels) {
      const std::array<Pixel, 4> nb{{{p.x + 1, p.y}, {p.x - 1, p.y}, {p.x, p.y + 1}, {p.x, p.y - 1}}};
      for (const Pixel& q : nb) {
        if (!mask.contains(q.x, q.y)) continue;
        const int r = map.region_id(q.x, q.y);
        if (r < 0) continue;
        const std::uint64_t key = (static_cast<std::uint64_t>(r) << 32) | mask.index(p.x, p.y);
        if (!seen.insert(key).second) continue;
        auto& region = map.regions[r];
        region.samples.push_back({p.x, p.y, depth.depth(p.x, p.y)});
        if (region.contour_ids.empty() || region.contour_ids.back() != c.id) {
          if (std::find(region.contour_ids.begin(), region.contour_ids.end(), c.id) == region.contour_ids.end())
            region.contour_ids.push_back(c.id);
        }
      }
    }
  }
  map.contours = std::move(contours);
  return map;
}

struct RegionStats {
  std::size_t region_count = 0;
  std::size_t max_samples = 0;
  bool operator==(const RegionStats&) const = default;
};

inline RegionStats region_stats(const VoidSpaceMap& map) {
  RegionStats s{map.regions.size(), 0};
  for (const auto& r : map.regions) s.max_samples = std::max(s.max_samples, r.samples.size());
  return s;
}

// ------------------------------------------------------------- debug dumps

inline nlohmann::json contours_to_json(const std::vector<Contour>& contours) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : contours) {
    nlohmann::json px = nlohmann::json::array();
    for (const auto& p : c.pixels) px.push_back({p.x, p.y});
    out.push_back({{"id", c.id},
                   {"kind", c.kind == ContourKind::outer ? "outer" : "hole"},
                   {"parent", c.parent ? nlohmann::json(*c.parent) : nlohmann::json(nullptr)},
                   {"pixels", std::move(px)}});
  }
  return out;
}

/// Indexed PNG: palette entry 0 is foreground, region r uses entry 1 + r % 255.
inline io::Bytes encode_region_png(const Image<int>& region_id) {
  std::vector<std::array<std::uint8_t, 3>> palette{{0, 0, 0}};
  for (std::uint32_t k = 0; k < 255; ++k) {
    std::uint32_t hsh = (k + 1) * 2654435761u;
    palette.push_back({static_cast<std::uint8_t>(64 + (hsh >> 24) % 192), static_cast<std::uint8_t>(64 + (hsh >> 16) % 192),
                       static_cast<std::uint8_t>(64 + (hsh >> 8) % 192)});
  }
  Image<std::uint8_t> idx(region_id.width(), region_id.height());
  for (std::size_t i = 0; i < idx.size(); ++i)
    idx[i] = region_id[i] < 0 ? 0 : static_cast<std::uint8_t>(1 + region_id[i] % 255);
  return io::encode_png_indexed(idx, palette);
}

}  // namespace vss
