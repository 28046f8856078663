#pragma once

// Scene ingest: mesh and depth-map loading, rasterization to a view-space
// depth image, depth linearization and per-frame normalization.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vss/error.hpp"
#include "vss/image.hpp"
#include "vss/io.hpp"
#include "vss/math.hpp"

namespace vss {

struct Camera {
  Vec3 position{0.0, 0.0, 5.0};
  Vec3 target{0.0, 0.0, 0.0};
  Vec3 up{0.0, 1.0, 0.0};
  double vfov_deg = 45.0;
  double near = 0.1;
  double far = 100.0;
  int width = 640;
  int height = 480;

  /// Throws ParameterError naming the first violated field.
  void validate() const {
    if (width < 1) throw ParameterError("camera.width", "must be >= 1");
    if (height < 1) throw ParameterError("camera.height", "must be >= 1");
    if (!(vfov_deg > 0.0 && vfov_deg < 180.0)) throw ParameterError("camera.vfov_deg", "must lie in (0, 180)");
    if (!(near > 0.0)) throw ParameterError("camera.near", "must be > 0");
    if (!(far > near)) throw ParameterError("camera.far", "must be > near");
    const Vec3 forward = target - position;
    if (length(forward) == 0.0) throw ParameterError("camera.target", "must differ from position");
    if (length(cross(normalize(forward), normalize(up))) < 1e-9)
      throw ParameterError("camera.up", "must not be parallel to the view direction");
  }
};

/// Orthonormal view basis. View space is x right, y down, z forward so that
/// it lines up with pixel coordinates; view depth is the z component.
struct ViewBasis {
  Vec3 origin, right, down, forward;
  double focal = 1.0;  // pixels per unit at depth 1
  double cx = 0.0, cy = 0.0;

  explicit ViewBasis(const Camera& cam) {
    origin = cam.position;
    forward = normalize(cam.target - cam.position);
    right = normalize(cross(forward, cam.up));
    down = -cross(right, forward);
    focal = 0.5 * cam.height / std::tan(0.5 * cam.vfov_deg * std::numbers::pi / 180.0);
    cx = 0.5 * cam.width;
    cy = 0.5 * cam.height;
  }

  Vec3 to_view(const Vec3& p) const {
    const Vec3 d = p - origin;
    return {dot(d, right), dot(d, down), dot(d, forward)};
  }
  Vec3 direction_to_view(const Vec3& v) const { return {dot(v, right), dot(v, down), dot(v, forward)}; }
};

struct Triangle {
  std::uint32_t a = 0, b = 0, c = 0;
  bool operator==(const Triangle&) const = default;
};

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::optional<std::vector<double>> attribute;

  void validate() const {
    const auto n = vertices.size();
    for (std::size_t i = 0; i < triangles.size(); ++i) {
      const auto& t = triangles[i];
      if (t.a >= n || t.b >= n || t.c >= n)
        throw FormatError("triangle " + std::to_string(i) + " references a vertex index out of range");
    }
    if (attribute && attribute->size() != n)
      throw FormatError("attribute length " + std::to_string(attribute->size()) + " != vertex count " +
                        std::to_string(n));
  }

  std::pair<Vec3, Vec3> bounds() const {
    Vec3 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
            std::numeric_limits<double>::max()};
    Vec3 hi = -lo;
    for (const auto& v : vertices) {
      lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
      hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
    }
    return {lo, hi};
  }
};

inline constexpr double kBackgroundDepth = std::numeric_limits<double>::infinity();

/// Per-pixel view depth plus background mask. The mask is authoritative;
/// background pixels also carry kBackgroundDepth.
struct DepthImage {
  Image<double> depth;
  Image<std::uint8_t> background;
  std::optional<Image<double>> attribute;
  std::optional<Image<Vec3>> normal;

  DepthImage() = default;
  DepthImage(int w, int h) : depth(w, h, kBackgroundDepth), background(w, h, 1) {}

  int width() const { return depth.width(); }
  int height() const { return depth.height(); }
  bool is_background(int x, int y) const { return background(x, y) != 0; }
  std::size_t foreground_count() const {
    return static_cast<std::size_t>(std::count(background.pixels().begin(), background.pixels().end(), 0));
  }
  void set_foreground(int x, int y, double z) {
    depth(x, y) = z;
    background(x, y) = 0;
  }
};

// ------------------------------------------------------------------ loading

struct MeshLoadOptions {
  /// Polygons with more than three corners are fan-triangulated when true
  /// and rejected otherwise.
  bool triangulate_polygons = true;
};

namespace detail {

inline double parse_double(std::string_view tok, const std::string& where) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) throw FormatError(where + ": bad number '" + std::string(tok) + "'");
  return v;
}

inline long parse_index(std::string_view tok, const std::string& where) {
  tok = tok.substr(0, tok.find('/'));
  long v = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end || v == 0)
    throw FormatError(where + ": bad face index '" + std::string(tok) + "'");
  return v;
}

}  // namespace detail

/// One decimal per line; blank lines and '#' comments are skipped.
inline std::vector<double> load_scalars(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scalar sidecar '" + path.string() + "'");
  std::vector<double> values;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const double v = detail::parse_double(std::string_view(line).substr(first, last - first + 1), where);
    if (!(v >= 0.0 && v <= 1.0)) throw FormatError(where + ": scalar " + std::to_string(v) + " outside [0,1]");
    values.push_back(v);
  }
  return values;
}

/// Reads 'v' and 'f' records of a Wavefront OBJ file; other records are ignored.
inline Mesh parse_obj(std::istream& in, const std::string& name, const MeshLoadOptions& opts = {}) {
  Mesh mesh;
  std::string line;
  std::vector<std::string_view> toks;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    toks.clear();
    std::string_view rest(line);
    while (!rest.empty()) {
      const auto b = rest.find_first_not_of(" \t\r");
      if (b == std::string_view::npos) break;
      rest.remove_prefix(b);
      const auto e = rest.find_first_of(" \t\r");
      toks.push_back(rest.substr(0, e));
      rest.remove_prefix(e == std::string_view::npos ? rest.size() : e);
    }
    if (toks.empty() || toks[0].starts_with('#')) continue;
    const std::string where = name + ":" + std::to_string(lineno);
    if (toks[0] == "v") {
      if (toks.size() < 4) throw FormatError(where + ": vertex needs three coordinates");
      mesh.vertices.push_back({detail::parse_double(toks[1], where), detail::parse_double(toks[2], where),
                               detail::parse_double(toks[3], where)});
    } else if (toks[0] == "f") {
      if (toks.size() < 4) throw FormatError(where + ": face needs at least three vertices");
      if (toks.size() > 4 && !opts.triangulate_polygons)
        throw FormatError(where + ": non-triangle face with " + std::to_string(toks.size() - 1) + " vertices");
      std::vector<std::uint32_t> idx;
      for (std::size_t k = 1; k < toks.size(); ++k) {
        long i = detail::parse_index(toks[k], where);
        const long n = static_cast<long>(mesh.vertices.size());
        const long resolved = i > 0 ? i - 1 : n + i;
        if (resolved < 0 || resolved >= n)
          throw FormatError(where + ": face index " + std::to_string(i) + " out of range (" + std::to_string(n) +
                            " vertices defined)");
        idx.push_back(static_cast<std::uint32_t>(resolved));
      }
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  return mesh;
}

/// Loads an OBJ mesh, optionally with a per-vertex scalar sidecar.
inline Mesh load_mesh(const std::filesystem::path& path,
                      const std::optional<std::filesystem::path>& sidecar = std::nullopt,
                      const MeshLoadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh '" + path.string() + "'");
  Mesh mesh = parse_obj(in, path.string(), opts);
  if (sidecar) mesh.attribute = load_scalars(*sidecar);
  mesh.validate();
  return mesh;
}

inline void write_obj(std::ostream& out, const Mesh& mesh) {
  out.precision(9);
  for (const auto& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const auto& t : mesh.triangles) out << "f " << t.a + 1 << ' ' << t.b + 1 << ' ' << t.c + 1 << '\n';
}

// ------------------------------------------------------------ depth values

/// Maps a [0,1] depth-buffer value to view depth; 0 -> near, 1 -> far.
inline double linearize_depth(double d_ndc, double near, double far) {
  return near * far / (far - d_ndc * (far - near));
}

/// Inverse of linearize_depth.
inline double ndc_depth(double view_depth, double near, double far) {
  return far * (view_depth - near) / (view_depth * (far - near));
}

/// Replaces every foreground value with its view depth. Background untouched.
inline DepthImage linearize_depth_image(DepthImage img, double near, double far) {
  for (std::size_t i = 0; i < img.depth.size(); ++i)
    if (!img.background[i]) img.depth[i] = linearize_depth(img.depth[i], near, far);
  return img;
}

/// Converts a view-depth image into depth-buffer values (what a GPU z-buffer holds).
inline DepthImage to_ndc_depth_image(DepthImage img, double near, double far) {
  for (std::size_t i = 0; i < img.depth.size(); ++i)
    if (!img.background[i]) img.depth[i] = ndc_depth(img.depth[i], near, far);
  return img;
}

/// Affinely maps foreground depth to [0,1] (min -> 0, max -> 1). A constant
/// foreground maps to 0. Throws EmptySceneError without foreground.
inline DepthImage normalize_depth(DepthImage img) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  bool any = false;
  for (std::size_t i = 0; i < img.depth.size(); ++i) {
    if (img.background[i]) continue;
    any = true;
    lo = std::min(lo, img.depth[i]);
    hi = std::max(hi, img.depth[i]);
  }
  if (!any) throw EmptySceneError();
  const double range = hi - lo;
  for (std::size_t i = 0; i < img.depth.size(); ++i) {
    if (img.background[i]) continue;
    img.depth[i] = range > 0.0 ? (img.depth[i] - lo) / range : 0.0;
  }
  return img;
}

/// PFM input is linear depth (background: +inf, NaN or <= 0). 16-bit PNG
/// input holds depth-buffer values scaled to 65535 (background: 65535) and
/// requires near/far for linearization.
inline DepthImage load_depth_map(const std::filesystem::path& path, std::optional<double> near = std::nullopt,
                                 std::optional<double> far = std::nullopt) {
  const io::Bytes bytes = io::read_file(path);
  const std::string name = path.string();
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == 'f') {
    const Image<float> raw = io::decode_pfm(bytes, name);
    DepthImage img(raw.width(), raw.height());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const double v = raw[i];
      if (std::isfinite(v) && v > 0.0) {
        img.depth[i] = v;
        img.background[i] = 0;
      }
    }
    return img;
  }
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) {
    if (!near || !far) throw ParameterError("near/far", "required to linearize a PNG depth map");
    if (!(*near > 0.0 && *far > *near)) throw ParameterError("near/far", "need 0 < near < far");
    const io::GrayPng png = io::decode_png_gray(bytes, name);
    if (png.bit_depth != 16) throw FormatError(name + ": depth PNG must be 16-bit grayscale");
    DepthImage img(png.pixels.width(), png.pixels.height());
    for (std::size_t i = 0; i < png.pixels.size(); ++i) {
      const std::uint16_t v = png.pixels[i];
      if (v == 65535) continue;
      img.depth[i] = linearize_depth(v / 65535.0, *near, *far);
      img.background[i] = 0;
    }
    return img;
  }
  throw FormatError(name + ": unknown depth map format (expected PFM 'Pf' or 16-bit PNG)");
}

/// Foreground depth as PFM; background written as +inf.
inline io::Bytes encode_depth_pfm(const Image<double>& depth, const Image<std::uint8_t>& background) {
  Image<float> out(depth.width(), depth.height());
  for (std::size_t i = 0; i < depth.size(); ++i)
    out[i] = background[i] ? std::numeric_limits<float>::infinity() : static_cast<float>(depth[i]);
  return io::encode_pfm(out);
}

// ------------------------------------------------------------ rasterization

/// Area-weighted vertex normals.
inline std::vector<Vec3> vertex_normals(const Mesh& mesh) {
  std::vector<Vec3> n(mesh.vertices.size());
  for (const auto& t : mesh.triangles) {
    const Vec3 fn = cross(mesh.vertices[t.b] - mesh.vertices[t.a], mesh.vertices[t.c] - mesh.vertices[t.a]);
    n[t.a] += fn;
    n[t.b] += fn;
    n[t.c] += fn;
  }
  for (auto& v : n) v = normalize(v);
  return n;
}

namespace detail {

struct ClipVertex {
  Vec3 view;  // view-space position
  Vec3 normal;
  double attr = 0.0;
};

inline ClipVertex lerp(const ClipVertex& a, const ClipVertex& b, double t) {
  return {a.view + (b.view - a.view) * t, a.normal + (b.normal - a.normal) * t, a.attr + (b.attr - a.attr) * t};
}

// Sutherland-Hodgman against z >= near.
inline std::vector<ClipVertex> clip_near(const std::array<ClipVertex, 3>& tri, double near) {
  std::vector<ClipVertex> out;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = tri[i];
    const ClipVertex& b = tri[(i + 1) % 3];
    const bool ain = a.view.z >= near;
    const bool bin = b.view.z >= near;
    if (ain) out.push_back(a);
    if (ain != bin) out.push_back(lerp(a, b, (near - a.view.z) / (b.view.z - a.view.z)));
  }
  return out;
}

struct ScreenVertex {
  double sx, sy, inv_z;
  Vec3 normal_over_z;
  double attr_over_z;
};

inline bool owns_edge(double dx, double dy) { return dy > 0.0 || (dy == 0.0 && dx < 0.0); }

// Edge function evaluated from a canonical endpoint order, so the two
// triangles sharing an edge see exactly opposite values.
inline double edge_function(const ScreenVertex& a, const ScreenVertex& b, double px, double py) {
  const bool flip = b.sx < a.sx || (b.sx == a.sx && b.sy < a.sy);
  const ScreenVertex& p = flip ? b : a;
  const ScreenVertex& q = flip ? a : b;
  const double w = (q.sx - p.sx) * (py - p.sy) - (q.sy - p.sy) * (px - p.sx);
  return flip ? -w : w;
}

}  // namespace detail

/// Z-buffer rasterization of the mesh. Depth is distance along the view
/// axis; attribute and normal are interpolated perspective-correctly.
/// Normals are returned in view space (x right, y down, z forward) and
/// oriented toward the camera. No back-face culling.
inline DepthImage rasterize(const Mesh& mesh, const Camera& cam) {
  cam.validate();
  mesh.validate();
  DepthImage img(cam.width, cam.height);
  Image<Vec3> normals(cam.width, cam.height, Vec3{0.0, 0.0, -1.0});
  Image<double> attr(cam.width, cam.height, 0.0);
  const ViewBasis basis(cam);
  const std::vector<Vec3> vn = vertex_normals(mesh);
  const bool has_attr = mesh.attribute.has_value();

  for (const auto& t : mesh.triangles) {
    std::array<detail::ClipVertex, 3> tri;
    const std::array<std::uint32_t, 3> ids{t.a, t.b, t.c};
    for (int k = 0; k < 3; ++k) {
      tri[k].view = basis.to_view(mesh.vertices[ids[k]]);
      tri[k].normal = basis.direction_to_view(vn[ids[k]]);
      tri[k].attr = has_attr ? (*mesh.attribute)[ids[k]] : 0.0;
    }
    const auto poly = detail::clip_near(tri, cam.near);
    if (poly.size() < 3) continue;
    std::vector<detail::ScreenVertex> sv;
    sv.reserve(poly.size());
    for (const auto& v : poly) {
      const double iz = 1.0 / v.view.z;
      sv.push_back({basis.cx + basis.focal * v.view.x * iz, basis.cy + basis.focal * v.view.y * iz, iz,
                    v.normal * iz, v.attr * iz});
    }
    for (std::size_t k = 1; k + 1 < sv.size(); ++k) {
      detail::ScreenVertex v0 = sv[0], v1 = sv[k], v2 = sv[k + 1];
      double area = (v1.sx - v0.sx) * (v2.sy - v0.sy) - (v1.sy - v0.sy) * (v2.sx - v0.sx);
      if (area == 0.0) continue;
      if (area < 0.0) {
        std::swap(v1, v2);
        area = -area;
      }
      const int x0 = std::max(0, static_cast<int>(std::floor(std::min({v0.sx, v1.sx, v2.sx}))));
      const int x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(std::max({v0.sx, v1.sx, v2.sx}))));
      const int y0 = std::max(0, static_cast<int>(std::floor(std::min({v0.sy, v1.sy, v2.sy}))));
      const int y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(std::max({v0.sy, v1.sy, v2.sy}))));
      const std::array<const detail::ScreenVertex*, 3> v{&v0, &v1, &v2};
      for (int y = y0; y <= y1; ++y) {
        const double py = y + 0.5;
        for (int x = x0; x <= x1; ++x) {
          const double px = x + 0.5;
          std::array<double, 3> w{};
          bool inside = true;
          for (int e = 0; e < 3 && inside; ++e) {
            const auto& a = *v[(e + 1) % 3];
            const auto& b = *v[(e + 2) % 3];
            w[e] = detail::edge_function(a, b, px, py);
            inside = w[e] > 0.0 || (w[e] == 0.0 && detail::owns_edge(b.sx - a.sx, b.sy - a.sy));
          }
          if (!inside) continue;
          const double b0 = w[0] / area, b1 = w[1] / area, b2 = w[2] / area;
          const double inv_z = b0 * v0.inv_z + b1 * v1.inv_z + b2 * v2.inv_z;
          const double z = 1.0 / inv_z;
          if (z > cam.far || z >= img.depth(x, y)) continue;
          img.set_foreground(x, y, z);
          Vec3 n = normalize((v0.normal_over_z * b0 + v1.normal_over_z * b1 + v2.normal_over_z * b2) * z);
          const Vec3 ray{(px - basis.cx) / basis.focal, (py - basis.cy) / basis.focal, 1.0};
          if (dot(n, ray) > 0.0) n = -n;
          normals(x, y) = n;
          attr(x, y) = (b0 * v0.attr_over_z + b1 * v1.attr_over_z + b2 * v2.attr_over_z) * z;
        }
      }
    }
  }
  img.normal = std::move(normals);
  if (has_attr) img.attribute = std::move(attr);
  return img;
}

/// Camera looking at the mesh bounding-box centre from `direction`, at a
/// distance that fits the bounding sphere into the vertical field of view
/// scaled by `zoom` (> 1 moves closer).
inline Camera frame_mesh(const Mesh& mesh, int width, int height, Vec3 direction = {0.0, 0.0, 1.0},
                         double zoom = 1.0, double vfov_deg = 45.0) {
  const auto [lo, hi] = mesh.bounds();
  const Vec3 center = (lo + hi) * 0.5;
  const double radius = std::max(1e-6, 0.5 * length(hi - lo));
  const double dist = radius / std::sin(0.5 * vfov_deg * std::numbers::pi / 180.0) / zoom;
  Camera cam;
  cam.target = center;
  cam.position = center + normalize(direction) * dist;
  cam.up = std::abs(normalize(direction).y) > 0.99 ? Vec3{0.0, 0.0, -1.0} : Vec3{0.0, 1.0, 0.0};
  cam.vfov_deg = vfov_deg;
  cam.near = std::max(1e-3 * dist, dist - 2.0 * radius);
  cam.far = dist + 2.0 * radius;
  cam.width = width;
  cam.height = height;
  return cam;
}

}  // namespace vss
