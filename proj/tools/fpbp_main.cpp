// fpbp command line: floor-plan preprocessing, scenario simulation, replay
// positioning, and metric evaluation.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>

#include "fpbp/engine.hpp"
#include "fpbp/errors.hpp"
#include "fpbp/io.hpp"
#include "fpbp/sim.hpp"

namespace fs = std::filesystem;
using namespace fpbp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

EngineConfig load_config(const std::string& path) {
  if (path.empty()) return EngineConfig{};
  return engine_config_from_json(read_file(path));
}

BeaconRegistry load_registry(const std::string& path) {
  const std::string text = read_file(path);
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv")
    return BeaconRegistry::from_csv(text);
  return BeaconRegistry::from_json(text);
}

std::map<int, std::shared_ptr<const FloorPlanMap>> load_maps(
    const std::vector<std::string>& paths) {
  std::map<int, std::shared_ptr<const FloorPlanMap>> maps;
  for (const auto& p : paths) {
    auto map = std::make_shared<FloorPlanMap>(FloorPlanMap::from_artifact_json(read_file(p)));
    maps[map->floor_id()] = std::move(map);
  }
  if (maps.empty()) throw ConfigError("at least one --map is required");
  return maps;
}

int cmd_preprocess(const std::string& raster_path, const std::string& palette_path,
                   const std::string& manifest_path, const std::string& out_path) {
  StylizedRaster raster;
  raster.image = read_png(raster_path);
  if (!palette_path.empty()) raster.palette = palette_from_json(read_file(palette_path));
  const MapManifest manifest = manifest_from_json(read_file(manifest_path));
  const FloorPlanMap map = compile_map(raster, manifest.resolution_r, manifest.grid_interval_m,
                                       manifest.floor_id, manifest.north_offset_rad);
  write_file(out_path, map.to_artifact_json());

  int rooms = 0;
  for (const auto& c : map.contours())
    if (c.kind == Contour::Kind::RoomBoundary) ++rooms;
  std::cout << "compiled " << map.width_px() << "x" << map.height_px() << " px map, floor "
            << map.floor_id() << ": " << rooms << " room(s), " << map.contours().size()
            << " contour(s), " << map.grid().points.size() << " grid points -> " << out_path
            << "\n";
  return kExitOk;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 std::optional<uint64_t> seed_override) {
  Scenario scenario = Scenario::from_json(read_file(scenario_path));
  if (seed_override) scenario.seed = *seed_override;
  // Map/beacon paths are relative to the scenario file.
  const fs::path base = fs::path(scenario_path).parent_path();
  std::map<int, std::shared_ptr<const FloorPlanMap>> maps;
  for (const auto& [floor, rel] : scenario.map_paths) {
    auto map = std::make_shared<FloorPlanMap>(
        FloorPlanMap::from_artifact_json(read_file((base / rel).string())));
    maps[floor] = std::move(map);
  }
  const BeaconRegistry registry = load_registry((base / scenario.beacons_path).string());

  const Truth truth = generate_truth(scenario, maps);
  const auto events = build_event_log(truth, registry, scenario);

  fs::create_directories(out_dir);
  write_file((fs::path(out_dir) / "events.jsonl").string(), event_log_to_jsonl(events));
  write_file((fs::path(out_dir) / "truth.jsonl").string(), truth_to_jsonl(truth.steps));
  std::cout << "simulated " << truth.steps.size() << " steps / "
            << truth.end_ms() / 1000.0 << " s -> " << out_dir << "\n";
  return kExitOk;
}

int cmd_locate(const std::vector<std::string>& map_paths, const std::string& beacons_path,
               const std::string& log_path, const std::string& algo,
               const std::string& config_path, uint64_t seed, const std::string& out_path,
               const std::string& trace_path) {
  const auto maps = load_maps(map_paths);
  const BeaconRegistry registry = load_registry(beacons_path);
  const auto events = event_log_from_jsonl(read_file(log_path));
  const EngineConfig config = load_config(config_path);
  const Algorithm algorithm = algorithm_from_string(algo);

  std::vector<std::string> trace;
  const auto outputs = run_replay(maps, registry, events, algorithm, config, seed,
                                  trace_path.empty() ? nullptr : &trace);
  write_file(out_path, outputs_to_jsonl(outputs));
  if (!trace_path.empty()) {
    std::string joined;
    for (const auto& line : trace) joined += line + '\n';
    write_file(trace_path, joined);
  }
  std::cout << algorithm_name(algorithm) << ": " << outputs.size() << " outputs -> " << out_path
            << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& out_path, const std::string& truth_path,
             const std::vector<std::string>& map_paths, const std::string& report_path,
             const std::string& cdf_path, bool per_step) {
  const auto outputs = outputs_from_jsonl(read_file(out_path));
  const auto truth = truth_from_jsonl(read_file(truth_path));
  std::map<int, std::shared_ptr<const FloorPlanMap>> maps;
  if (!map_paths.empty()) maps = load_maps(map_paths);
  const MetricsReport report = evaluate(outputs, truth, maps);

  std::cout << "MPE  " << report.mpe << " m\nP50  " << report.p50 << " m\nP80  " << report.p80
            << " m\nSTD  " << report.std_dev << " m\nwall crossings  " << report.wall_crossings
            << "\n";
  if (per_step) {
    for (size_t i = 0; i < report.errors.size(); ++i)
      std::cout << i << "," << report.errors[i] << "\n";
  }
  if (!report_path.empty()) write_file(report_path, report.to_json());
  if (!cdf_path.empty()) write_file(cdf_path, cdf_to_csv(cdf_table(report.errors)));
  return kExitOk;
}

// Writes a self-contained demo data set: stylized raster, palette, manifest,
// beacons, default parameters, and a scenario walking the corridor and rooms.
int cmd_demo(const std::string& out_dir);

// Calibrates the step-length coefficient against a known stride: walks the
// detector over an IMU log and solves stride = beta * mean(z_pp^(1/4)).
int cmd_calibrate(const std::string& log_path, double stride_m, const std::string& config_path) {
  const EngineConfig config = load_config(config_path);
  const auto events = event_log_from_jsonl(read_file(log_path));
  StepDetector detector(config.step_detector);
  OrientationTracker orientation(config.orientation);
  double sum_root = 0.0;
  int steps = 0;
  std::optional<int64_t> last_t;
  for (const auto& ev : events) {
    if (ev.kind != ReplayEvent::Kind::Imu || !ev.imu.accel_linear) continue;
    double dt = 1.0 / config.imu_rate_hz;
    if (last_t && ev.t_ms > *last_t) dt = (ev.t_ms - *last_t) / 1000.0;
    last_t = ev.t_ms;
    orientation.update(ev.imu, dt);
    const double z = vertical_accel(*ev.imu.accel_linear, orientation.device_to_map());
    if (const auto det = detector.push(z)) {
      sum_root += std::pow(det->z_pp, 0.25);
      ++steps;
    }
  }
  if (steps == 0) throw DataError("no steps detected in " + log_path);
  const double beta = stride_m / (sum_root / steps);
  std::cout << "steps detected: " << steps << "\nbeta = " << beta << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fpbp: floor-plan-assisted BLE + PDR indoor positioning toolkit"};
  app.require_subcommand(1);

  auto* preprocess = app.add_subcommand("preprocess", "compile a stylized floor plan raster");
  std::string raster_path, palette_path, manifest_path, out_path = "map.json";
  preprocess->add_option("--raster", raster_path, "stylized PNG floor plan")->required();
  preprocess->add_option("--palette", palette_path, "palette JSON (default colors if omitted)");
  preprocess->add_option("--manifest", manifest_path, "map manifest JSON")->required();
  preprocess->add_option("--out", out_path, "output artifact path");

  auto* simulate = app.add_subcommand("simulate", "synthesize logs for a scenario");
  std::string scenario_path, sim_out = "sim_out";
  std::optional<uint64_t> sim_seed;
  simulate->add_option("--scenario", scenario_path, "scenario JSON")->required();
  simulate->add_option("--out", sim_out, "output directory");
  simulate->add_option("--seed", sim_seed, "seed override");

  auto* locate = app.add_subcommand("locate", "replay an event log through an estimator");
  std::vector<std::string> map_paths;
  std::string beacons_path, log_path, algo = "fpbp", config_path, locate_out = "outputs.jsonl",
                                      trace_path;
  uint64_t seed = 1;
  locate->add_option("--map", map_paths, "compiled map artifact(s)")->required();
  locate->add_option("--beacons", beacons_path, "beacon registry JSON")->required();
  locate->add_option("--log", log_path, "merged event log JSONL")->required();
  locate->add_option("--algo", algo, "fpbp|bp|pdr|gml|gimle|trilateration|frbw");
  locate->add_option("--config", config_path, "parameter file JSON");
  locate->add_option("--seed", seed, "replay seed");
  locate->add_option("--out", locate_out, "output JSONL");
  locate->add_option("--debug-trace", trace_path, "correction trace JSONL");

  auto* eval = app.add_subcommand("eval", "compare outputs against ground truth");
  std::string eval_outputs, truth_path, report_path, cdf_path;
  std::vector<std::string> eval_maps;
  bool per_step = false;
  eval->add_option("--outputs", eval_outputs, "outputs JSONL")->required();
  eval->add_option("--truth", truth_path, "truth JSONL")->required();
  eval->add_option("--map", eval_maps, "map artifact(s) for wall-crossing counts");
  eval->add_option("--report", report_path, "metrics JSON output");
  eval->add_option("--cdf", cdf_path, "CDF CSV output");
  eval->add_flag("--per-step", per_step, "print the per-step error series");

  auto* demo = app.add_subcommand("demo", "write a runnable demo data set");
  std::string demo_out = "demo";
  demo->add_option("--out", demo_out, "output directory");

  auto* calibrate = app.add_subcommand("calibrate-beta",
                                       "fit the step-length coefficient to a known stride");
  std::string cal_log, cal_config;
  double cal_stride = 0.6;
  calibrate->add_option("--log", cal_log, "IMU event log JSONL")->required();
  calibrate->add_option("--stride", cal_stride, "true stride length in meters");
  calibrate->add_option("--config", cal_config, "parameter file JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (preprocess->parsed())
      return cmd_preprocess(raster_path, palette_path, manifest_path, out_path);
    if (simulate->parsed()) return cmd_simulate(scenario_path, sim_out, sim_seed);
    if (locate->parsed())
      return cmd_locate(map_paths, beacons_path, log_path, algo, config_path, seed, locate_out,
                        trace_path);
    if (eval->parsed())
      return cmd_eval(eval_outputs, truth_path, eval_maps, report_path, cdf_path, per_step);
    if (demo->parsed()) return cmd_demo(demo_out);
    if (calibrate->parsed()) return cmd_calibrate(cal_log, cal_stride, cal_config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}

namespace {

int cmd_demo(const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path base(out_dir);
  const Palette palette;

  // A small two-floor building: a corridor flanked by four rooms with doors,
  // plus an elevator (FTA) cell at the east end. 10 px/m.
  const int w = 300;
  const int h = 180;
  ImageRgb img(w, h, palette.walkable);
  auto fill = [&](int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) img.at(x, y) = c;
  };
  // Outer walls.
  fill(0, 0, w, 3, palette.wall);
  fill(0, h - 3, w, h, palette.wall);
  fill(0, 0, 3, h, palette.wall);
  fill(w - 3, 0, w, h, palette.wall);
  // Corridor band between y = 72..108 (7.2..10.8 m); room divider walls.
  fill(0, 69, w, 72, palette.wall);
  fill(0, 108, w, 111, palette.wall);
  fill(148, 0, 152, 69, palette.wall);
  fill(148, 111, 152, h, palette.wall);
  // Doors (1.2 m openings) through the corridor walls.
  fill(60, 69, 72, 72, palette.door);
  fill(210, 69, 222, 72, palette.door);
  fill(60, 108, 72, 111, palette.door);
  fill(210, 108, 222, 111, palette.door);
  // Elevator cell at the east end of the corridor, open to the west.
  fill(270, 90, w - 3, 93, palette.wall);
  fill(272, 72, w - 3, 90, palette.fta);

  write_png((base / "floor6.png").string(), img);
  write_png((base / "floor7.png").string(), img);
  write_file((base / "palette.json").string(), palette_to_json(palette));

  MapManifest manifest6{10.0, 0.3, 6, 0.0};
  MapManifest manifest7{10.0, 0.3, 7, 0.0};
  write_file((base / "manifest6.json").string(), manifest_to_json(manifest6));
  write_file((base / "manifest7.json").string(), manifest_to_json(manifest7));

  StylizedRaster raster{img, palette};
  const FloorPlanMap map6 = compile_map(raster, 10.0, 0.3, 6);
  const FloorPlanMap map7 = compile_map(raster, 10.0, 0.3, 7);
  write_file((base / "floor6.map.json").string(), map6.to_artifact_json());
  write_file((base / "floor7.map.json").string(), map7.to_artifact_json());

  std::vector<Beacon> beacons;
  int id = 0;
  for (int floor : {6, 7}) {
    for (double x : {4.0, 12.0, 20.0, 27.0}) {
      for (double y : {4.0, 9.0, 14.0}) {
        char uuid[32];
        std::snprintf(uuid, sizeof(uuid), "b-%d-%02d", floor, id++ % 12);
        beacons.push_back({uuid, {x, y}, floor});
      }
    }
  }
  const BeaconRegistry registry(beacons);
  write_file((base / "beacons.json").string(), registry.to_json());

  Scenario scenario;
  scenario.map_paths = {{6, "floor6.map.json"}, {7, "floor7.map.json"}};
  scenario.beacons_path = "beacons.json";
  scenario.start_floor = 6;
  scenario.seed = 7;
  PathLeg walk;
  walk.floor = 6;
  walk.points = {{2.0, 9.0},  {6.6, 9.0}, {6.6, 13.0}, {6.6, 9.0},
                 {24.0, 9.0}, {4.0, 9.0}};
  scenario.path = {walk};
  write_file((base / "scenario.json").string(), scenario.to_json());
  write_file((base / "params.json").string(), engine_config_to_json(EngineConfig{}));

  std::cout << "demo data written to " << out_dir << "\n"
            << "try:\n"
            << "  fpbp preprocess --raster " << (base / "floor6.png").string() << " --palette "
            << (base / "palette.json").string() << " --manifest "
            << (base / "manifest6.json").string() << " --out "
            << (base / "floor6.map.json").string() << "\n"
            << "  fpbp simulate --scenario " << (base / "scenario.json").string() << " --out "
            << (base / "run").string() << "\n"
            << "  fpbp locate --map " << (base / "floor6.map.json").string() << " --map "
            << (base / "floor7.map.json").string() << " --beacons "
            << (base / "beacons.json").string() << " --log "
            << (base / "run/events.jsonl").string() << " --algo fpbp --out "
            << (base / "run/outputs.jsonl").string() << "\n"
            << "  fpbp eval --outputs " << (base / "run/outputs.jsonl").string() << " --truth "
            << (base / "run/truth.jsonl").string() << " --map "
            << (base / "floor6.map.json").string() << "\n";
  return kExitOk;
}

}  // namespace
