#pragma once

// HTTP frame service: GET /render returns a PNG for the posted camera and
// cue parameters, GET /meta describes the loaded scene.

#include <httplib.h>

#include <charconv>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "vss/error.hpp"
#include "vss/pipeline.hpp"
#include "vss/scene.hpp"

namespace vss {

struct FrameRequest {
  Camera camera;
  IdwParams idw;
  ColorMapKind colormap = ColorMapKind::pseudo_chromadepth;
  int iso_count = 12;
  bool ao_enabled = true;
};

/// Bounds the number of concurrent holders; waiters are admitted in arrival order.
class FifoLimiter {
 public:
  explicit FifoLimiter(int slots) : slots_(slots < 1 ? 1 : slots) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    const std::uint64_t ticket = next_ticket_++;
    queue_.push_back(ticket);
    cv_.wait(lock, [&] { return active_ < slots_ && queue_.front() == ticket; });
    queue_.pop_front();
    ++active_;
    cv_.notify_all();
  }

  void release() {
    std::lock_guard lock(mutex_);
    --active_;
    cv_.notify_all();
  }

  int active() const {
    std::lock_guard lock(mutex_);
    return active_;
  }

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::uint64_t> queue_;
  std::uint64_t next_ticket_ = 0;
  int active_ = 0;
  int slots_;
};

struct ServiceOptions {
  int max_concurrent_renders = 2;
  int default_width = 640;
  int default_height = 480;
  int max_dimension = 4096;
  std::optional<std::filesystem::path> static_dir;  // viewer assets served at /
};

namespace detail {

inline std::optional<std::string> param(const httplib::Params& params, const char* key) {
  auto it = params.find(key);
  if (it == params.end()) return std::nullopt;
  return it->second;
}

inline double param_double(const httplib::Params& params, const char* key, double fallback) {
  const auto v = param(params, key);
  if (!v) return fallback;
  double out = 0.0;
  const char* end = v->data() + v->size();
  auto [ptr, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) throw ParameterError(key, "expected a number, got '" + *v + "'");
  return out;
}

inline long param_int(const httplib::Params& params, const char* key, long fallback) {
  const auto v = param(params, key);
  if (!v) return fallback;
  long out = 0;
  const char* end = v->data() + v->size();
  auto [ptr, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc() || ptr != end) throw ParameterError(key, "expected an integer, got '" + *v + "'");
  return out;
}

}  // namespace detail

/// Parses /render query parameters. Missing camera parameters fall back to
/// an automatic framing of the mesh; near/far default to the bounding
/// sphere's extent along the view distance.
inline FrameRequest parse_frame_request(const httplib::Params& q, const Mesh& mesh, const ServiceOptions& opts = {}) {
  FrameRequest r;
  const long w = detail::param_int(q, "w", opts.default_width);
  const long h = detail::param_int(q, "h", opts.default_height);
  if (w < 1 || w > opts.max_dimension) throw ParameterError("w", "must lie in [1, " + std::to_string(opts.max_dimension) + "]");
  if (h < 1 || h > opts.max_dimension) throw ParameterError("h", "must lie in [1, " + std::to_string(opts.max_dimension) + "]");
  const double fov = detail::param_double(q, "fov", 45.0);
  if (!(fov > 0.0 && fov < 180.0)) throw ParameterError("fov", "must lie in (0, 180)");

  const Camera framed = frame_mesh(mesh, static_cast<int>(w), static_cast<int>(h), {0.0, 0.0, 1.0}, 1.0, fov);
  Camera& c = r.camera;
  c = framed;
  const bool has_pos = q.count("px") || q.count("py") || q.count("pz");
  if (has_pos) {
    for (const char* k : {"px", "py", "pz"})
      if (!q.count(k)) throw ParameterError(k, "px, py and pz must be given together");
    c.position = {detail::param_double(q, "px", 0), detail::param_double(q, "py", 0), detail::param_double(q, "pz", 0)};
  }
  c.target = {detail::param_double(q, "tx", framed.target.x), detail::param_double(q, "ty", framed.target.y),
              detail::param_double(q, "tz", framed.target.z)};
  c.up = {detail::param_double(q, "ux", framed.up.x), detail::param_double(q, "uy", framed.up.y),
          detail::param_double(q, "uz", framed.up.z)};
  if (has_pos) {
    const auto [lo, hi] = mesh.bounds();
    const double radius = std::max(1e-6, 0.5 * length(hi - lo));
    const double dist = length(c.position - (lo + hi) * 0.5);
    c.near = std::max(1e-3 * std::max(dist, radius), dist - 1.05 * radius);
    c.far = dist + 1.05 * radius;
  }
  c.near = detail::param_double(q, "near", c.near);
  c.far = detail::param_double(q, "far", c.far);
  if (!(c.near > 0.0)) throw ParameterError("near", "must be > 0");
  if (!(c.far > c.near)) throw ParameterError("far", "must be > near");
  if (length(c.target - c.position) == 0.0) throw ParameterError("tx", "target must differ from position");
  if (length(cross(normalize(c.target - c.position), normalize(c.up))) < 1e-9)
    throw ParameterError("ux", "up must not be parallel to the view direction");

  r.idw.p = detail::param_double(q, "p", r.idw.p);
  if (!(r.idw.p > 0.0)) throw ParameterError("p", "power parameter must be > 0");
  r.idw.step = static_cast<int>(detail::param_int(q, "step", r.idw.step));
  if (r.idw.step < 1) throw ParameterError("step", "must be >= 1");
  if (auto cm = detail::param(q, "cmap")) r.colormap = parse_colormap(*cm, "cmap");
  r.iso_count = static_cast<int>(detail::param_int(q, "iso", r.iso_count));
  if (r.iso_count < 0) throw ParameterError("iso", "must be >= 0");
  const long ao = detail::param_int(q, "ao", 1);
  if (ao != 0 && ao != 1) throw ParameterError("ao", "must be 0 or 1");
  r.ao_enabled = ao == 1;
  return r;
}

inline nlohmann::json scene_meta(const Mesh& mesh, const ServiceOptions& opts = {}) {
  const auto [lo, hi] = mesh.bounds();
  const Camera cam = frame_mesh(mesh, opts.default_width, opts.default_height);
  return {{"bbox", {{"min", {lo.x, lo.y, lo.z}}, {"max", {hi.x, hi.y, hi.z}}}},
          {"vertex_count", mesh.vertices.size()},
          {"triangle_count", mesh.triangles.size()},
          {"has_attribute", mesh.attribute.has_value()},
          {"defaults",
           {{"p", 2.0},
            {"step", 1},
            {"cmap", "pcd"},
            {"iso", 12},
            {"ao", 1},
            {"w", opts.default_width},
            {"h", opts.default_height},
            {"fov", cam.vfov_deg},
            {"position", {cam.position.x, cam.position.y, cam.position.z}},
            {"target", {cam.target.x, cam.target.y, cam.target.z}},
            {"up", {cam.up.x, cam.up.y, cam.up.z}}}}};
}

inline io::Bytes render_request_png(const Mesh& mesh, const FrameRequest& req) {
  CueConfig cues;
  cues.colormap = req.colormap;
  cues.iso_count = req.iso_count;
  cues.ao_enabled = req.ao_enabled;
  const RenderResult res = render_mesh(mesh, req.camera, req.idw, cues);
  return io::encode_png(res.image);
}

/// Serves one immutable scene. Construct, bind(), then listen() (blocking)
/// or run it on a thread and call stop().
class FrameService {
 public:
  FrameService(Mesh mesh, ServiceOptions opts = {}) : mesh_(std::move(mesh)), opts_(std::move(opts)),
                                                      limiter_(opts_.max_concurrent_renders) {
    mesh_.validate();
    // httplib defaults to SO_REUSEPORT, which lets a second server share a busy port.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    routes();
  }

  /// Binds the listening socket; port 0 picks a free port. Throws when the
  /// port is unavailable.
  int bind(const std::string& host, int port) {
    if (port == 0) {
      port_ = server_.bind_to_any_port(host.c_str());
      if (port_ < 0) throw Error("cannot bind " + host);
    } else {
      if (!server_.bind_to_port(host.c_str(), port)) throw Error("cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
      port_ = port;
    }
    return port_;
  }

  void listen() { server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }
  int port() const { return port_; }
  const Mesh& mesh() const { return mesh_; }

 private:
  static void json_reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  void routes() {
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    server_.Get("/meta", [this](const httplib::Request&, httplib::Response& res) {
      json_reply(res, 200, scene_meta(mesh_, opts_));
    });
    server_.Get("/render", [this](const httplib::Request& req, httplib::Response& res) {
      FrameRequest fr;
      try {
        fr = parse_frame_request(req.params, mesh_, opts_);
      } catch (const ParameterError& e) {
        json_reply(res, 400, {{"error", e.what()}, {"param", e.param()}});
        return;
      } catch (const std::exception& e) {
        json_reply(res, 400, {{"error", e.what()}});
        return;
      }
      limiter_.acquire();
      try {
        io::Bytes png = render_request_png(mesh_, fr);
        limiter_.release();
        res.set_header("Cache-Control", "public, max-age=3600");
        res.set_content(std::string(png.begin(), png.end()), "image/png");
      } catch (const StageError& e) {
        limiter_.release();
        json_reply(res, 500, {{"error", e.what()}, {"stage", e.stage()}});
      } catch (const std::exception& e) {
        limiter_.release();
        json_reply(res, 500, {{"error", e.what()}, {"stage", "unknown"}});
      }
    });
    if (opts_.static_dir) {
      server_.set_mount_point("/", opts_.static_dir->string());
    } else {
      server_.Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("<!doctype html><html><head><title>vss</title></head><body><p>Frame service running. See /meta and /render.</p></body></html>",
                        "text/html");
      });
    }
  }

  Mesh mesh_;
  ServiceOptions opts_;
  FifoLimiter limiter_;
  httplib::Server server_;
  int port_ = -1;
};

}  // namespace vss
