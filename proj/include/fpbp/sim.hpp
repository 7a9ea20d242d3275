#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fpbp/engine.hpp"
#include "fpbp/floorplan.hpp"
#include "fpbp/radio.hpp"

namespace fpbp {

// One leg of a scripted trajectory: either a walk along a polyline on a
// floor, or a stationary dwell (optionally ending with a floor change, e.g.
// an elevator ride).
struct PathLeg {
  int floor = 0;
  std::vector<Vec2> points;
  double dwell_s = 0.0;
  std::optional<int> switch_to_floor;
};

enum class StepLogMode { Direct, ImuSinusoid };

struct Scenario {
  std::map<int, std::string> map_paths;  // floor id -> artifact path
  std::string beacons_path;
  std::vector<PathLeg> path;
  int start_floor = 0;
  double speed_mps = 1.0;
  double stride_m = 0.6;
  PathLossModel pathloss;
  double beacon_height_m = 2.5;
  double device_height_m = 1.2;
  double cross_floor_atten_db = 20.0;
  int64_t broadcast_interval_ms = 200;
  double imu_rate_hz = 60.0;
  double heading_noise_std_rad = 0.05;
  double steplen_noise_std_m = 0.02;
  double heading_drift_rad_per_step = 0.0;
  StepLogMode step_mode = StepLogMode::Direct;
  uint64_t seed = 1;

  std::string to_json() const;
  static Scenario from_json(const std::string& text);
};

struct TruthStep {
  int64_t t_ms = 0;
  Vec2 position;
  int floor = 0;
  double heading = 0.0;
  double stride_m = 0.0;
};

// Ground truth: a continuous trajectory (piecewise-linear knots) plus the
// step schedule along it.
struct Truth {
  struct Knot {
    int64_t t_ms;
    Vec2 position;
    int floor;
  };
  std::vector<Knot> knots;
  std::vector<TruthStep> steps;

  Vec2 position_at(int64_t t_ms) const;
  int floor_at(int64_t t_ms) const;
  int64_t end_ms() const { return knots.empty() ? 0 : knots.back().t_ms; }
};

// Walks the scenario polylines at the configured speed, emitting a step
// every stride. Each leg segment is validated against walls (doors and FTAs
// are legitimate crossings). Throws InfeasiblePathError with the offending
// segment index.
Truth generate_truth(const Scenario& scenario,
                     const std::map<int, std::shared_ptr<const FloorPlanMap>>& maps);

// Per-beacon RSSI sampling every broadcast interval: log-distance model over
// the 3-D distance (beacon height minus device height), Gaussian noise, and
// a fixed cross-floor attenuation when the beacon is on a different floor
// than the user.
std::vector<ReplayEvent> synthesize_rssi(const Truth& truth, const BeaconRegistry& registry,
                                         const Scenario& scenario, uint64_t seed);

// Step records with heading/length noise (Direct), or a 60 Hz vertical
// acceleration sinusoid embedding the gait for exercising the detector
// (ImuSinusoid).
std::vector<ReplayEvent> synthesize_steps(const Truth& truth, const Scenario& scenario,
                                          uint64_t seed);

// Merged, timestamp-ordered event log (init record first; RSSI sorts before
// IMU/steps at equal timestamps).
std::vector<ReplayEvent> build_event_log(const Truth& truth, const BeaconRegistry& registry,
                                         const Scenario& scenario);

struct MetricsReport {
  double mpe = 0.0;
  double p50 = 0.0;
  double p80 = 0.0;
  double std_dev = 0.0;
  std::vector<double> errors;
  int wall_crossings = 0;

  std::string to_json() const;
};

// Step-indexed evaluation of outputs against the truth schedule. Output k is
// compared with truth step k; wall crossings count output segments that
// raycast into a wall (doors passable), skipping segments that start or end
// at a flagged BLE reset or divergence re-initialization.
// Throws LengthMismatchError when the counts differ.
MetricsReport evaluate(const std::vector<PoseOutput>& outputs, const std::vector<TruthStep>& truth,
                       const std::map<int, std::shared_ptr<const FloorPlanMap>>& maps);

// Nearest-rank quantile (q in (0, 1]): sorted[ceil(q n) - 1].
double nearest_rank_quantile(std::vector<double> values, double q);

// CDF table (error, cumulative fraction) rows for CSV export.
std::vector<std::pair<double, double>> cdf_table(const std::vector<double>& errors);

}  // namespace fpbp
