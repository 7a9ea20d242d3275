// Scenario builders shared by the integration and acceptance suites: a
// 48 x 24 m evaluation building (4 rooms + corridor + elevator FTA), a
// two-room doorway map, and the trajectories used for estimator-ordering,
// door-crossing, and floor-switch runs.
#pragma once

#include <map>
#include <memory>

#include "fpbp/floorplan.hpp"
#include "fpbp/radio.hpp"
#include "fpbp/sim.hpp"
#include "test_maps.hpp"

namespace fpbp::scenarios {

// 10 px/m; corridor band y in (10.2, 13.8) m, doors at x ~ 10.6 and 34.6 m,
// elevator bank marked FTA at the east end (x > 43.5 m).
inline StylizedRaster eval_building_raster() {
  Palette palette;
  ImageRgb img = testmaps::blank_raster(480, 240, palette);
  testmaps::add_border(img, 3, palette.wall);
  testmaps::fill_rect(img, 0, 99, 480, 102, palette.wall);    // corridor top wall
  testmaps::fill_rect(img, 0, 138, 480, 141, palette.wall);   // corridor bottom wall
  testmaps::fill_rect(img, 238, 0, 242, 99, palette.wall);    // top room divider
  testmaps::fill_rect(img, 238, 141, 242, 240, palette.wall); // bottom divider
  for (int xd : {100, 340}) {
    testmaps::fill_rect(img, xd, 99, xd + 12, 102, palette.door);
    testmaps::fill_rect(img, xd, 138, xd + 12, 141, palette.door);
  }
  testmaps::fill_rect(img, 435, 102, 477, 138, palette.fta);  // elevator bank
  return {img, palette};
}

inline std::map<int, std::shared_ptr<const FloorPlanMap>> eval_building_maps() {
  const auto raster = eval_building_raster();
  std::map<int, std::shared_ptr<const FloorPlanMap>> maps;
  maps[6] = std::make_shared<FloorPlanMap>(compile_map(raster, 10.0, 0.3, 6));
  maps[7] = std::make_shared<FloorPlanMap>(compile_map(raster, 10.0, 0.3, 7));
  return maps;
}

// 12 beacons per floor: six along the corridor, six in the rooms.
inline BeaconRegistry eval_building_beacons() {
  std::vector<Beacon> beacons;
  for (int floor : {6, 7}) {
    std::vector<Vec2> spots;
    for (double x : {4.0, 12.0, 20.0, 28.0, 36.0, 44.0}) spots.push_back({x, 12.0});
    for (Vec2 p : {Vec2{8, 19}, Vec2{24, 19}, Vec2{40, 19}, Vec2{8, 5}, Vec2{40, 5}, Vec2{24, 5}})
      spots.push_back(p);
    for (size_t i = 0; i < spots.size(); ++i) {
      char uuid[32];
      std::snprintf(uuid, sizeof(uuid), "e-%d-%02d", floor, static_cast<int>(i));
      beacons.push_back({uuid, spots[i], floor});
    }
  }
  return BeaconRegistry(std::move(beacons));
}

// ~326-step corridor + room loop with drifting-heading PDR noise.
inline Scenario eval_scenario(uint64_t seed) {
  Scenario s;
  s.start_floor = 6;
  s.seed = seed;
  s.pathloss = {2.2, -59.0, 4.0};
  s.broadcast_interval_ms = 66;
  s.heading_noise_std_rad = 0.035;
  s.steplen_noise_std_m = 0.02;
  s.heading_drift_rad_per_step = 0.004;
  PathLeg walk;
  walk.floor = 6;
  walk.points = {{3, 12},      {45, 12},     {10.6, 12}, {10.6, 15.5}, {10.6, 18.5},
                 {6, 18.5},    {6, 16},      {10.6, 16}, {10.6, 12},   {45, 12},
                 {3, 12},      {24, 12}};
  s.path = {walk};
  return s;
}

inline StylizedRaster two_room_raster() { return testmaps::two_room_raster(12); }

inline std::map<int, std::shared_ptr<const FloorPlanMap>> two_room_maps() {
  std::map<int, std::shared_ptr<const FloorPlanMap>> maps;
  maps[1] = std::make_shared<FloorPlanMap>(compile_map(two_room_raster(), 10.0, 0.3, 1));
  return maps;
}

inline BeaconRegistry two_room_beacons() {
  std::vector<Beacon> beacons;
  const std::vector<Vec2> spots{{2, 2}, {2, 6}, {5, 4.2}, {9.5, 4.2}, {12, 2}, {12, 6}};
  for (size_t i = 0; i < spots.size(); ++i) {
    char uuid[32];
    std::snprintf(uuid, sizeof(uuid), "t-%02d", static_cast<int>(i));
    beacons.push_back({uuid, spots[i], 1});
  }
  return BeaconRegistry(std::move(beacons));
}

// Straight double crossing of the doorway (A -> B -> A) with settling loops
// on both sides: exactly two room switches.
inline Scenario two_room_scenario(uint64_t seed) {
  Scenario s;
  s.start_floor = 1;
  s.seed = seed;
  s.pathloss = {2.2, -59.0, 4.0};
  s.broadcast_interval_ms = 66;
  s.heading_noise_std_rad = 0.03;
  s.steplen_noise_std_m = 0.02;
  PathLeg walk;
  walk.floor = 1;
  walk.points = {{2.0, 4.2}, {12.0, 4.2}, {12.0, 2.2}, {12.0, 6.2}, {12.0, 4.2},
                 {2.2, 4.2}, {2.2, 6.0},  {2.2, 2.4},  {2.2, 4.2},  {5.0, 4.2}};
  s.path = {walk};
  return s;
}

// Walk into the elevator on floor 6, ride (mid-dwell floor change), walk out
// on floor 7.
inline Scenario elevator_scenario(uint64_t seed) {
  Scenario s;
  s.start_floor = 6;
  s.seed = seed;
  s.pathloss = {2.2, -59.0, 4.0};
  s.broadcast_interval_ms = 66;
  s.heading_noise_std_rad = 0.03;
  s.steplen_noise_std_m = 0.02;
  PathLeg in;
  in.floor = 6;
  in.points = {{20.0, 12.0}, {46.5, 12.0}};
  PathLeg ride;
  ride.dwell_s = 10.0;
  ride.switch_to_floor = 7;
  PathLeg out;
  out.floor = 7;
  out.points = {{46.5, 12.0}, {10.0, 12.0}};
  s.path = {in, ride, out};
  return s;
}

inline std::vector<PoseOutput> run_algorithm(
    const std::map<int, std::shared_ptr<const FloorPlanMap>>& maps,
    const BeaconRegistry& registry, const Scenario& scenario, Algorithm algorithm,
    uint64_t seed, const EngineConfig& config = {}) {
  const Truth truth = generate_truth(scenario, maps);
  const auto events = build_event_log(truth, registry, scenario);
  return run_replay(maps, registry, events, algorithm, config, seed);
}

}  // namespace fpbp::scenarios
