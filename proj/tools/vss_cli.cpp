// Command-line front end: render, bench, serve, make-scene.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vss/bench.hpp"
#include "vss/pipeline.hpp"
#include "vss/service.hpp"

namespace {

std::vector<int> parse_steps(const std::string& csv) {
  std::vector<int> steps;
  std::stringstream ss(csv);
  for (std::string tok; std::getline(ss, tok, ',');) {
    const int s = std::stoi(tok);
    if (s < 1) throw vss::ParameterError("--steps", "step sizes must be >= 1");
    steps.push_back(s);
  }
  if (steps.empty()) throw vss::ParameterError("--steps", "at least one step size required");
  return steps;
}

vss::FrameService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Void space surface renderer"};
  app.require_subcommand(1);

  auto* render = app.add_subcommand("render", "Render one frame from a JSON config");
  std::string config_path, out_path;
  bool dump_layers = false, print_stats = false;
  int width = 0, height = 0;
  render->add_option("config", config_path, "Render configuration (JSON)")->required()->check(CLI::ExistingFile);
  render->add_option("--out", out_path, "Output PNG (overrides config)");
  render->add_flag("--dump-layers", dump_layers, "Also write depth/height/region/AO/iso layers");
  render->add_option("--width", width, "Frame width (overrides config)")->check(CLI::PositiveNumber);
  render->add_option("--height", height, "Frame height (overrides config)")->check(CLI::PositiveNumber);
  render->add_flag("--stats", print_stats, "Print run statistics as JSON to stdout");

  auto* bench = app.add_subcommand("bench", "Time the void-space stages over camera presets");
  std::string scene_path, attr_path, steps_csv = "1,3,5", report_path, artifacts_path;
  int repeats = 5;
  int bench_w = 1280, bench_h = 720;
  double bench_p = 2.0;
  bench->add_option("scene", scene_path, "Mesh (OBJ)")->required()->check(CLI::ExistingFile);
  bench->add_option("--repeats", repeats, "Runs per cell")->check(CLI::PositiveNumber);
  bench->add_option("--steps", steps_csv, "Comma-separated step sizes");
  bench->add_option("--out", report_path, "Report JSON")->required();
  bench->add_option("--artifacts", artifacts_path, "Also write step-artifact deviations (far preset) as JSON");
  bench->add_option("--width", bench_w, "Frame width")->check(CLI::PositiveNumber);
  bench->add_option("--height", bench_h, "Frame height")->check(CLI::PositiveNumber);
  bench->add_option("--p", bench_p, "Power parameter")->check(CLI::PositiveNumber);
  bench->add_option("--attribute", attr_path, "Per-vertex scalar sidecar")->check(CLI::ExistingFile);

  auto* serve = app.add_subcommand("serve", "Serve frames over HTTP");
  std::string serve_scene, serve_attr, host = "127.0.0.1", static_dir;
  int port = 8080, max_concurrent = 2;
  serve->add_option("scene", serve_scene, "Mesh (OBJ)")->required()->check(CLI::ExistingFile);
  serve->add_option("--attribute", serve_attr, "Per-vertex scalar sidecar")->check(CLI::ExistingFile);
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--max-concurrent", max_concurrent, "Concurrent renders")->check(CLI::PositiveNumber);
  serve->add_option("--static", static_dir, "Viewer assets served at /")->check(CLI::ExistingDirectory);

  auto* make_scene = app.add_subcommand("make-scene", "Write the procedural reference vessel tree");
  std::string scene_out, scalars_out;
  unsigned seed = 7;
  make_scene->add_option("out", scene_out, "Output OBJ")->required();
  make_scene->add_option("--scalars", scalars_out, "Output scalar sidecar");
  make_scene->add_option("--seed", seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*render) {
      std::ifstream in(config_path);
      const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      // Ranges are validated after the command-line overrides are applied.
      vss::RenderConfig cfg = vss::parse_config_text(text, std::filesystem::path(config_path).parent_path());
      if (!out_path.empty()) cfg.output = out_path;
      if (dump_layers) cfg.dump_layers = true;
      if (width > 0) cfg.camera.width = width;
      if (height > 0) cfg.camera.height = height;
      const vss::RenderResult res = vss::render_frame(cfg);
      if (print_stats) std::cout << res.stats.to_json().dump(2) << '\n';
      std::cerr << "wrote " << cfg.output.string() << '\n';
      return 0;
    }
    if (*bench) {
      const vss::Mesh mesh = vss::load_mesh(scene_path, attr_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(attr_path));
      vss::bench::BenchOptions opts;
      opts.steps = parse_steps(steps_csv);
      opts.repeats = repeats;
      opts.p = bench_p;
      const auto presets = vss::bench::reference_presets(mesh, bench_w, bench_h);
      const auto report = vss::bench::run_benchmark(mesh, presets, opts);
      std::ofstream(report_path) << report.to_json().dump(2) << '\n';
      for (const auto& pr : report.presets) {
        std::cout << pr.name << " (" << pr.regions << " - " << pr.max_samples << ")";
        for (const auto& s : pr.steps) std::cout << "  step " << s.step << ": " << s.median_ms << " ms" << (s.noisy ? " [noisy]" : "");
        std::cout << '\n';
        if (!pr.warning.empty()) std::cerr << "warning: " << pr.warning << '\n';
      }
      if (!artifacts_path.empty()) {
        std::vector<int> steps = opts.steps;
        if (std::find(steps.begin(), steps.end(), 1) == steps.end()) steps.insert(steps.begin(), 1);
        const auto dev = vss::bench::compare_step_artifacts(vss::rasterize(mesh, presets.front().camera), steps, bench_p);
        std::ofstream(artifacts_path) << vss::bench::to_json(dev).dump(2) << '\n';
      }
      return 0;
    }
    if (*serve) {
      vss::Mesh mesh = vss::load_mesh(serve_scene, serve_attr.empty() ? std::nullopt : std::optional<std::filesystem::path>(serve_attr));
      vss::ServiceOptions opts;
      opts.max_concurrent_renders = max_concurrent;
      if (!static_dir.empty()) opts.static_dir = static_dir;
      vss::FrameService service(std::move(mesh), opts);
      const int bound = service.bind(host, port);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on http://" << host << ":" << bound << '\n';
      service.listen();
      return 0;
    }
    if (*make_scene) {
      const vss::Mesh mesh = vss::bench::make_reference_scene(seed);
      std::ofstream out(scene_out);
      vss::write_obj(out, mesh);
      if (!scalars_out.empty()) {
        std::ofstream sc(scalars_out);
        sc.precision(9);
        for (double a : *mesh.attribute) sc << a << '\n';
      }
      std::cerr << "wrote " << mesh.vertices.size() << " vertices, " << mesh.triangles.size() << " triangles\n";
      return 0;
    }
  } catch (const vss::StageError& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
