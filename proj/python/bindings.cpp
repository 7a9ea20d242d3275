// Python bindings for the core pipeline: map compilation and queries, BLE
// estimation, PDR, particle-filter fusion, correction, replay, simulation,
// and metrics.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fpbp/engine.hpp"
#include "fpbp/errors.hpp"
#include "fpbp/io.hpp"
#include "fpbp/ppc.hpp"
#include "fpbp/sim.hpp"

namespace py = pybind11;
using namespace fpbp;

namespace {

StylizedRaster raster_from_array(py::array_t<uint8_t, py::array::c_style | py::array::forcecast> rgb,
                                 const Palette& palette) {
  if (rgb.ndim() != 3 || rgb.shape(2) != 3)
    throw ConfigError("raster array must have shape (height, width, 3)");
  StylizedRaster raster;
  raster.palette = palette;
  raster.image = ImageRgb(static_cast<int>(rgb.shape(1)), static_cast<int>(rgb.shape(0)));
  auto view = rgb.unchecked<3>();
  for (py::ssize_t y = 0; y < rgb.shape(0); ++y)
    for (py::ssize_t x = 0; x < rgb.shape(1); ++x)
      raster.image.at(static_cast<int>(x), static_cast<int>(y)) = {view(y, x, 0), view(y, x, 1),
                                                                   view(y, x, 2)};
  return raster;
}

Palette palette_from_dict(const py::dict& d) {
  Palette p;
  if (d.contains("walkable")) p.walkable = rgb_from_hex(d["walkable"].cast<std::string>());
  if (d.contains("wall")) p.wall = rgb_from_hex(d["wall"].cast<std::string>());
  if (d.contains("door")) p.door = rgb_from_hex(d["door"].cast<std::string>());
  if (d.contains("fta")) p.fta = rgb_from_hex(d["fta"].cast<std::string>());
  return p;
}

std::map<int, std::shared_ptr<const FloorPlanMap>> maps_by_floor(
    const std::vector<std::shared_ptr<FloorPlanMap>>& maps) {
  std::map<int, std::shared_ptr<const FloorPlanMap>> out;
  for (const auto& m : maps) out[m->floor_id()] = m;
  return out;
}

}  // namespace

PYBIND11_MODULE(_fpbp, m) {
  m.doc() = "Floor-plan-assisted BLE + PDR indoor positioning";

  py::register_exception<Error>(m, "FpbpError");

  py::class_<Vec2>(m, "Vec2")
      .def(py::init<double, double>(), py::arg("x") = 0.0, py::arg("y") = 0.0)
      .def_readwrite("x", &Vec2::x)
      .def_readwrite("y", &Vec2::y)
      .def("__repr__", [](const Vec2& v) {
        return "Vec2(" + std::to_string(v.x) + ", " + std::to_string(v.y) + ")";
      });

  py::enum_<MapFeature>(m, "MapFeature")
      .value("WALKABLE", MapFeature::Walkable)
      .value("FTA", MapFeature::Fta)
      .value("DOOR", MapFeature::Door)
      .value("WALL", MapFeature::Wall);

  py::class_<FloorPlanMap, std::shared_ptr<FloorPlanMap>>(m, "FloorPlanMap")
      .def_property_readonly("width_px", &FloorPlanMap::width_px)
      .def_property_readonly("height_px", &FloorPlanMap::height_px)
      .def_property_readonly("resolution", &FloorPlanMap::resolution)
      .def_property_readonly("floor_id", &FloorPlanMap::floor_id)
      .def_property_readonly("room_count", &FloorPlanMap::room_count)
      .def_property_readonly("grid_points",
                             [](const FloorPlanMap& map) {
                               std::vector<std::pair<double, double>> pts;
                               for (const auto& g : map.grid().points)
                                 pts.emplace_back(g.x, g.y);
                               return pts;
                             })
      .def("feature_at", [](const FloorPlanMap& map, double x,
                            double y) { return map.feature_at({x, y}); })
      .def("value_at", [](const FloorPlanMap& map, double x, double y) {
        return map.value_at({x, y});
      })
      .def("room_of",
           [](const FloorPlanMap& map, double x, double y) { return map.room_of({x, y}); })
      .def("surface_normal_at",
           [](const FloorPlanMap& map, double x, double y) {
             const Vec2 n = map.surface_normal_at({x, y});
             return std::make_pair(n.x, n.y);
           })
      .def("closest_contour_point",
           [](const FloorPlanMap& map, double x, double y) {
             const Vec2 c = map.closest_contour_point({x, y});
             return std::make_pair(c.x, c.y);
           })
      .def("raycast",
           [](const FloorPlanMap& map, double x1, double y1, double x2, double y2,
              double threshold) {
             const auto r = raycast(map, {x1, y1}, {x2, y2}, threshold);
             py::dict out;
             out["hit"] = r.hit;
             if (r.hit) {
               out["point"] = std::make_pair(r.point.x, r.point.y);
               out["feature"] = r.feature;
             }
             return out;
           },
           py::arg("x1"), py::arg("y1"), py::arg("x2"), py::arg("y2"),
           py::arg("threshold") = kObstacleAny)
      .def("to_artifact_json", &FloorPlanMap::to_artifact_json)
      .def_static("from_artifact_json", [](const std::string& text) {
        return std::make_shared<FloorPlanMap>(FloorPlanMap::from_artifact_json(text));
      });

  m.def(
      "compile_map",
      [](py::array_t<uint8_t, py::array::c_style | py::array::forcecast> rgb, double resolution,
         double grid_interval, int floor_id, double north_offset, const py::dict& palette) {
        return std::make_shared<FloorPlanMap>(
            compile_map(raster_from_array(rgb, palette_from_dict(palette)), resolution,
                        grid_interval, floor_id, north_offset));
      },
      py::arg("rgb"), py::arg("resolution_px_per_m"), py::arg("grid_interval_m") = 0.3,
      py::arg("floor_id") = 0, py::arg("north_offset_rad") = 0.0,
      py::arg("palette") = py::dict());

  py::class_<PathLossModel>(m, "PathLossModel")
      .def(py::init([](double n, double r0, double sigma) {
             return PathLossModel{n, r0, sigma};
           }),
           py::arg("n") = 2.2, py::arg("r0_dbm") = -59.0, py::arg("sigma_db") = 4.0)
      .def_readwrite("n", &PathLossModel::n)
      .def_readwrite("r0_dbm", &PathLossModel::r0_dbm)
      .def_readwrite("sigma_db", &PathLossModel::sigma_db);

  m.def("rssi_to_distance", &rssi_to_distance, py::arg("rssi_dbm"), py::arg("model"));
  m.def("rssi_from_distance", &rssi_from_distance, py::arg("distance_m"), py::arg("model"));
  m.def("expected_distance", &expected_distance, py::arg("true_distance_m"),
        py::arg("sigma_hat_db"), py::arg("n"));

  py::class_<BeaconRegistry>(m, "BeaconRegistry")
      .def(py::init([](const std::vector<std::tuple<std::string, double, double, int>>& rows) {
        std::vector<Beacon> beacons;
        for (const auto& [uuid, x, y, floor] : rows) beacons.push_back({uuid, {x, y}, floor});
        return BeaconRegistry(std::move(beacons));
      }))
      .def("__len__", &BeaconRegistry::size)
      .def("to_json", &BeaconRegistry::to_json)
      .def_static("from_json", &BeaconRegistry::from_json);

  py::class_<RssiKalman>(m, "RssiKalman")
      .def(py::init<double, double>(), py::arg("process_noise_q") = 0.16,
           py::arg("measurement_noise_r") = 16.0)
      .def("update", &RssiKalman::update)
      .def_property_readonly("estimate", &RssiKalman::estimate)
      .def_property_readonly("variance", &RssiKalman::variance);

  py::class_<StepDetector>(m, "StepDetector")
      .def(py::init([](int half_window, double z_threshold, int k_threshold) {
             return StepDetector({half_window, z_threshold, k_threshold});
           }),
           py::arg("half_window") = 15, py::arg("z_threshold") = 1.0,
           py::arg("k_threshold") = 18)
      .def("push", [](StepDetector& d, double z) -> py::object {
        const auto step = d.push(z);
        if (!step) return py::none();
        py::dict out;
        out["index"] = step->sample_index;
        out["z_pp"] = step->z_pp;
        return out;
      });

  m.def("weinberg_step_length", &weinberg_step_length, py::arg("z_pp"), py::arg("beta"));

  py::class_<ParticleSet>(m, "ParticleSet")
      .def_static(
          "init",
          [](double x, double y, int count, double step_noise, double heading_noise,
             double sigma_x_sq, uint64_t seed) {
            FusionConfig config;
            config.particle_count = count;
            config.step_noise_m = step_noise;
            config.heading_noise_rad = heading_noise;
            config.sigma_x_sq = sigma_x_sq;
            return ParticleSet::init({x, y}, config, seed);
          },
          py::arg("x"), py::arg("y"), py::arg("count") = 500, py::arg("step_noise_m") = 0.05,
          py::arg("heading_noise_rad") = 0.17453292519943295, py::arg("sigma_x_sq") = 0.1,
          py::arg("seed") = 1)
      .def("propagate",
           [](ParticleSet& set, int64_t t_ms, double length, double yaw) {
             set.propagate({t_ms, length, yaw});
           })
      .def("reweight", [](ParticleSet& set, double x, double y) { set.reweight({x, y}); })
      .def("resample", &ParticleSet::resample)
      .def("estimate",
           [](const ParticleSet& set) {
             const Vec2 e = set.estimate();
             return std::make_pair(e.x, e.y);
           })
      .def("__len__", &ParticleSet::size);

  m.def("event_log_from_jsonl", &event_log_from_jsonl);
  m.def("event_log_to_jsonl", &event_log_to_jsonl);

  py::class_<ReplayEvent>(m, "ReplayEvent");

  py::class_<PoseOutput>(m, "PoseOutput")
      .def_readonly("t_ms", &PoseOutput::t_ms)
      .def_property_readonly("x", [](const PoseOutput& o) { return o.position.x; })
      .def_property_readonly("y", [](const PoseOutput& o) { return o.position.y; })
      .def_readonly("floor", &PoseOutput::floor)
      .def_readonly("case_id", &PoseOutput::case_id)
      .def_readonly("diverged", &PoseOutput::diverged)
      .def_readonly("ble_reset", &PoseOutput::ble_reset);

  m.def(
      "run_replay",
      [](const std::vector<std::shared_ptr<FloorPlanMap>>& maps, const BeaconRegistry& registry,
         const std::vector<ReplayEvent>& events, const std::string& algorithm, uint64_t seed,
         const std::string& config_json) {
        const EngineConfig config =
            config_json.empty() ? EngineConfig{} : engine_config_from_json(config_json);
        return run_replay(maps_by_floor(maps), registry, events,
                          algorithm_from_string(algorithm), config, seed);
      },
      py::arg("maps"), py::arg("registry"), py::arg("events"), py::arg("algorithm") = "fpbp",
      py::arg("seed") = 1, py::arg("config_json") = "");

  py::class_<Scenario>(m, "Scenario")
      .def_static("from_json", &Scenario::from_json)
      .def("to_json", &Scenario::to_json);

  m.def(
      "simulate",
      [](const Scenario& scenario, const std::vector<std::shared_ptr<FloorPlanMap>>& maps,
         const BeaconRegistry& registry) {
        const auto by_floor = maps_by_floor(maps);
        const Truth truth = generate_truth(scenario, by_floor);
        const auto events = build_event_log(truth, registry, scenario);
        std::vector<std::tuple<int64_t, double, double, int, double>> steps;
        for (const auto& s : truth.steps)
          steps.emplace_back(s.t_ms, s.position.x, s.position.y, s.floor, s.heading);
        return std::make_pair(events, steps);
      },
      py::arg("scenario"), py::arg("maps"), py::arg("registry"));

  m.def(
      "evaluate",
      [](const std::vector<PoseOutput>& outputs,
         const std::vector<std::tuple<int64_t, double, double, int, double>>& truth_steps,
         const std::vector<std::shared_ptr<FloorPlanMap>>& maps) {
        std::vector<TruthStep> truth;
        for (const auto& [t, x, y, floor, heading] : truth_steps)
          truth.push_back({t, {x, y}, floor, heading, 0.6});
        const auto report = evaluate(outputs, truth, maps_by_floor(maps));
        py::dict out;
        out["mpe_m"] = report.mpe;
        out["p50_m"] = report.p50;
        out["p80_m"] = report.p80;
        out["std_m"] = report.std_dev;
        out["wall_crossings"] = report.wall_crossings;
        out["errors"] = report.errors;
        return out;
      },
      py::arg("outputs"), py::arg("truth_steps"),
      py::arg("maps") = std::vector<std::shared_ptr<FloorPlanMap>>{});

  m.def("default_config_json", [] { return engine_config_to_json(EngineConfig{}); });

  m.attr("OBSTACLE_ANY") = kObstacleAny;
  m.attr("PASS_FTA") = kPassFta;
  m.attr("WALL_ONLY") = kWallOnly;
}
