#pragma once

// Frame orchestration: ingest -> normalize -> contours -> labeling ->
// interpolation -> normals -> cues, plus the JSON render configuration.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vss/contours.hpp"
#include "vss/cues.hpp"
#include "vss/error.hpp"
#include "vss/io.hpp"
#include "vss/scene.hpp"
#include "vss/synthesis.hpp"

namespace vss {

struct RenderConfig {
  std::optional<std::filesystem::path> mesh_path;
  std::optional<std::filesystem::path> attribute_path;
  std::optional<std::filesystem::path> depth_map_path;
  std::filesystem::path output = "vss.png";

  Camera camera;
  /// Frame the mesh automatically; the camera's width, height and vfov are kept.
  bool auto_camera = true;
  Vec3 auto_direction{0.0, 0.0, 1.0};
  double auto_zoom = 1.0;

  IdwParams idw;
  CueConfig cues;

  bool dump_layers = false;
  std::optional<std::filesystem::path> dump_dir;  // defaults to the output's directory

  void validate() const {
    idw.validate();
    cues.validate();
    if (!mesh_path && !depth_map_path) throw ParameterError("input", "either input.mesh or input.depth_map is required");
    if (mesh_path && depth_map_path) throw ParameterError("input", "input.mesh and input.depth_map are exclusive");
    if (!(auto_zoom > 0.0)) throw ParameterError("camera.zoom", "must be > 0");
    if (!auto_camera || depth_map_path) camera.validate();
    if (camera.width < 1) throw ParameterError("camera.width", "must be >= 1");
    if (camera.height < 1) throw ParameterError("camera.height", "must be >= 1");
  }
};

// ------------------------------------------------------------- JSON config

namespace detail {

// Walks a JSON object, tracking the dotted path for error messages and
// rejecting keys that are never read.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParameterError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) {
    for (const char* k : keys) allowed_.insert(k);
    for (const auto& [k, v] : j_.items())
      if (!allowed_.count(k)) throw ParameterError(join(k), "unknown key");
  }

  bool has(const char* key) const { return j_.contains(key); }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  ConfigReader child(const char* key) const { return ConfigReader(j_.at(key), join(key)); }

  template <typename T>
  void read(const char* key, T& out) const {
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ParameterError(join(key), "expected a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ParameterError(join(key), "expected an integer");
      out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ParameterError(join(key), "expected a number");
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ParameterError(join(key), "expected a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, Vec3>) {
      if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number())
        throw ParameterError(join(key), "expected an array of three numbers");
      out = {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
    } else if constexpr (std::is_same_v<T, Rgb>) {
      Vec3 c;
      read(key, c);
      out = {c.x, c.y, c.z};
    } else {
      static_assert(sizeof(T) == 0, "unsupported config type");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> allowed_;
};

}  // namespace detail

inline ColorMapKind parse_colormap(const std::string& name, const std::string& param = "cues.colormap") {
  if (name == "chromadepth" || name == "cd") return ColorMapKind::chromadepth;
  if (name == "pseudo_chromadepth" || name == "pcd") return ColorMapKind::pseudo_chromadepth;
  if (name == "mono" || name == "dmd" || name == "dark_means_deep") return ColorMapKind::mono;
  if (name == "none") return ColorMapKind::none;
  throw ParameterError(param, "unknown colormap '" + name + "'");
}

inline std::string colormap_name(ColorMapKind k) {
  switch (k) {
    case ColorMapKind::chromadepth: return "chromadepth";
    case ColorMapKind::pseudo_chromadepth: return "pseudo_chromadepth";
    case ColorMapKind::mono: return "mono";
    case ColorMapKind::none: return "none";
  }
  return "none";
}

inline ParamMapKind parse_param_map(const std::string& name) {
  if (name == "green_yellow5") return ParamMapKind::green_yellow5;
  if (name == "green_yellow") return ParamMapKind::green_yellow;
  if (name == "neutral") return ParamMapKind::neutral;
  throw ParameterError("cues.param_map", "unknown vessel colormap '" + name + "'");
}

/// Builds a RenderConfig from JSON, rejecting unknown keys and mistyped
/// values. Relative paths resolve against `base_dir`. Omitted fields keep
/// their defaults. Value ranges are checked by RenderConfig::validate().
inline RenderConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  RenderConfig cfg;
  detail::ConfigReader root(j, "");
  root.allow({"input", "output", "camera", "idw", "cues", "dump_layers", "dump_dir"});
  auto resolve = [&](const std::string& p) { return base_dir.empty() ? std::filesystem::path(p) : base_dir / p; };

  if (root.has("input")) {
    auto in = root.child("input");
    in.allow({"mesh", "attribute", "depth_map"});
    std::string s;
    if (in.has("mesh")) in.read("mesh", s), cfg.mesh_path = resolve(s);
    if (in.has("attribute")) in.read("attribute", s), cfg.attribute_path = resolve(s);
    if (in.has("depth_map")) in.read("depth_map", s), cfg.depth_map_path = resolve(s);
  }
  if (root.has("output")) {
    std::string s;
    root.read("output", s);
    cfg.output = resolve(s);
  }
  if (root.has("camera")) {
    auto cam = root.child("camera");
    cam.allow({"position", "target", "up", "vfov_deg", "near", "far", "width", "height", "direction", "zoom"});
    cam.read("position", cfg.camera.position);
    cam.read("target", cfg.camera.target);
    cam.read("up", cfg.camera.up);
    cam.read("vfov_deg", cfg.camera.vfov_deg);
    cam.read("near", cfg.camera.near);
    cam.read("far", cfg.camera.far);
    cam.read("width", cfg.camera.width);
    cam.read("height", cfg.camera.height);
    cam.read("direction", cfg.auto_direction);
    cam.read("zoom", cfg.auto_zoom);
    cfg.auto_camera = !cam.has("position");
    if (cfg.auto_camera && (cam.has("target") || cam.has("up") || cam.has("near") || cam.has("far")))
      throw ParameterError("camera.position", "required when target/up/near/far are given");
  }
  if (root.has("idw")) {
    auto idw = root.child("idw");
    idw.allow({"p", "step"});
    idw.read("p", cfg.idw.p);
    idw.read("step", cfg.idw.step);
  }
  if (root.has("cues")) {
    auto c = root.child("cues");
    c.allow({"colormap", "iso_count", "iso_width", "light_dir", "ambient", "diffuse", "specular", "shininess",
             "ao_enabled", "ao_radius", "ao_samples", "ao_strength", "ao_bias", "ao_range", "param_map",
             "background", "relief_scale"});
    std::string s;
    if (c.has("colormap")) c.read("colormap", s), cfg.cues.colormap = parse_colormap(s);
    c.read("iso_count", cfg.cues.iso_count);
    c.read("iso_width", cfg.cues.iso_width);
    if (c.has("light_dir")) {
      Vec3 l;
      c.read("light_dir", l);
      if (length(l) == 0.0) throw ParameterError("cues.light_dir", "must be non-zero");
      cfg.cues.light_dir = normalize(l);
    }
    c.read("ambient", cfg.cues.ambient);
    c.read("diffuse", cfg.cues.diffuse);
    c.read("specular", cfg.cues.specular);
    c.read("shininess", cfg.cues.shininess);
    c.read("ao_enabled", cfg.cues.ao_enabled);
    c.read("ao_radius", cfg.cues.ao_radius);
    c.read("ao_samples", cfg.cues.ao_samples);
    c.read("ao_strength", cfg.cues.ao_strength);
    c.read("ao_bias", cfg.cues.ao_bias);
    c.read("ao_range", cfg.cues.ao_range);
    if (c.has("param_map")) c.read("param_map", s), cfg.cues.param_map = parse_param_map(s);
    c.read("background", cfg.cues.background);
    if (c.has("relief_scale")) {
      double k = 0.0;
      c.read("relief_scale", k);
      cfg.cues.relief_scale = k;
    }
  }
  root.read("dump_layers", cfg.dump_layers);
  if (root.has("dump_dir")) {
    std::string s;
    root.read("dump_dir", s);
    cfg.dump_dir = resolve(s);
  }
  return cfg;
}

/// Like config_from_json but without the input requirement, for callers
/// that supply the scene themselves.
inline RenderConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  return config_from_json(j, base_dir);
}

inline RenderConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  RenderConfig cfg = parse_config_text(text, path.parent_path());
  cfg.validate();
  return cfg;
}

// ------------------------------------------------------------ render frame

struct StageTiming {
  std::string name;
  double ms = 0.0;
};

struct RunStats {
  std::vector<StageTiming> stages;
  std::size_t region_count = 0;
  std::size_t max_samples = 0;
  int width = 0;
  int height = 0;

  double stage_ms(const std::string& name) const {
    for (const auto& s : stages)
      if (s.name == name) return s.ms;
    return 0.0;
  }

  nlohmann::json to_json() const {
    nlohmann::json st = nlohmann::json::array();
    for (const auto& s : stages) st.push_back({{"name", s.name}, {"ms", s.ms}});
    return {{"stages", st}, {"region_count", region_count}, {"max_samples", max_samples}, {"width", width},
            {"height", height}};
  }
};

struct FrameLayers {
  DepthImage depth;  // normalized
  VoidSpaceMap voids;
  HeightField field;
  CueLayers cues;
};

struct RenderResult {
  Image<io::Rgba8> image;
  RunStats stats;
  FrameLayers layers;
};

namespace detail {

template <typename Fn>
auto timed_stage(RunStats& stats, const char* name, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  auto finish = [&] {
    const auto t1 = std::chrono::steady_clock::now();
    stats.stages.push_back({name, std::chrono::duration<double, std::milli>(t1 - t0).count()});
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto r = fn();
      finish();
      return r;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what(), std::current_exception());
  }
}

}  // namespace detail

/// Stage order after ingest: normalize, contours, labeling, interpolation,
/// normals, cues.
inline RenderResult render_depth(const DepthImage& linear_depth, const IdwParams& idw, const CueConfig& cues,
                                 RunStats stats = {}) {
  RenderResult res;
  res.stats = std::move(stats);
  res.stats.width = linear_depth.width();
  res.stats.height = linear_depth.height();
  FrameLayers& L = res.layers;
  detail::timed_stage(res.stats, "validate", [&] {
    idw.validate();
    cues.validate();
  });
  L.depth = detail::timed_stage(res.stats, "normalize", [&] { return normalize_depth(linear_depth); });
  const Mask mask = foreground_mask(L.depth);
  auto contours = detail::timed_stage(res.stats, "contours", [&] { return trace_contours(mask); });
  L.voids = detail::timed_stage(res.stats, "labeling",
                                [&] { return label_void_spaces(mask, std::move(contours), L.depth); });
  const RegionStats rs = region_stats(L.voids);
  res.stats.region_count = rs.region_count;
  res.stats.max_samples = rs.max_samples;
  L.field = detail::timed_stage(res.stats, "interpolation", [&] { return interpolate_void_depth(L.depth, L.voids, idw); });
  const double k = cues.relief_scale.value_or(default_relief_scale(L.depth.width(), L.depth.height()));
  auto normals = detail::timed_stage(res.stats, "normals", [&] { return reconstruct_normals(L.field, k); });
  res.image = detail::timed_stage(res.stats, "cues", [&] { return composite(L.depth, L.field, normals, cues, &L.cues); });
  return res;
}

inline RenderResult render_mesh(const Mesh& mesh, const Camera& camera, const IdwParams& idw, const CueConfig& cues) {
  RunStats stats;
  const DepthImage depth = detail::timed_stage(stats, "rasterize", [&] { return rasterize(mesh, camera); });
  return render_depth(depth, idw, cues, std::move(stats));
}

inline Camera resolve_camera(const RenderConfig& cfg, const Mesh& mesh) {
  if (!cfg.auto_camera) return cfg.camera;
  Camera cam = frame_mesh(mesh, cfg.camera.width, cfg.camera.height, cfg.auto_direction, cfg.auto_zoom,
                          cfg.camera.vfov_deg);
  return cam;
}

/// Runs the full pipeline from a configuration: loads the input, renders,
/// writes the PNG (and layer dumps when enabled).
inline RenderResult render_frame(const RenderConfig& cfg) {
  RunStats stats;
  detail::timed_stage(stats, "config", [&] { cfg.validate(); });
  RenderResult res;
  if (cfg.mesh_path) {
    const Mesh mesh = detail::timed_stage(stats, "load", [&] { return load_mesh(*cfg.mesh_path, cfg.attribute_path); });
    const Camera cam = detail::timed_stage(stats, "camera", [&] {
      Camera c = resolve_camera(cfg, mesh);
      c.validate();
      return c;
    });
    const DepthImage depth = detail::timed_stage(stats, "rasterize", [&] { return rasterize(mesh, cam); });
    res = render_depth(depth, cfg.idw, cfg.cues, std::move(stats));
  } else {
    const DepthImage depth = detail::timed_stage(
        stats, "load", [&] { return load_depth_map(*cfg.depth_map_path, cfg.camera.near, cfg.camera.far); });
    res = render_depth(depth, cfg.idw, cfg.cues, std::move(stats));
  }
  detail::timed_stage(res.stats, "write", [&] {
    io::write_file(cfg.output, io::encode_png(res.image));
    if (!cfg.dump_layers) return;
    const auto dir = cfg.dump_dir.value_or(cfg.output.parent_path());
    if (!dir.empty()) std::filesystem::create_directories(dir);
    const std::string stem = cfg.output.stem().string();
    const FrameLayers& L = res.layers;
    io::write_file(dir / (stem + ".depth.pfm"), encode_depth_pfm(L.depth.depth, L.depth.background));
    io::write_file(dir / (stem + ".height.pfm"), encode_height_pfm(L.field));
    io::write_file(dir / (stem + ".regions.png"), encode_region_png(L.voids.region_id));
    io::write_file(dir / (stem + ".ao.png"), encode_gray_layer(L.cues.ao));
    io::write_file(dir / (stem + ".iso.png"), encode_gray_layer(L.cues.iso));
    std::ofstream(dir / (stem + ".contours.json")) << contours_to_json(L.voids.contours).dump();
  });
  return res;
}

}  // namespace vss
