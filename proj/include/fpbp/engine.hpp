#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fpbp/floorplan.hpp"
#include "fpbp/fusion.hpp"
#include "fpbp/pdr.hpp"
#include "fpbp/ppc.hpp"
#include "fpbp/radio.hpp"

namespace fpbp {

struct FloorTransitionPolicy {
  int fta_dwell_required = 4;  // consecutive qualifying updates
  // Band below the max RSSI that counts as "strongest". Must stay below the
  // cross-floor penetration loss (~20 dB) yet wide enough that several
  // same-floor beacons fall inside it at typical deployment density.
  double cross_floor_margin_db = 15.0;
  int min_cross_floor_beacons = 3;
};

struct EngineConfig {
  GmlConfig gml;
  PathLossModel pathloss;
  double kalman_q = 0.16;
  double kalman_r = 16.0;
  int64_t estimation_interval_ms = 250;
  int64_t init_duration_ms = 2000;
  int64_t stale_fix_ms = 2000;
  FusionConfig fusion;
  PpcConfig ppc;
  StepDetectorConfig step_detector;
  OrientationConfig orientation;
  double step_beta = 0.45;
  double imu_rate_hz = 60.0;
  bool use_ppc = true;  // false runs the fusion-only ablation
  FloorTransitionPolicy floor_policy;
};

struct PoseOutput {
  int64_t t_ms = 0;
  Vec2 position;
  int floor = 0;
  int case_id = 0;
  bool diverged = false;
  bool ble_reset = false;
  std::optional<GmlMode> ble_mode;   // set by BLE-only replays
  std::optional<Vec2> hit;           // correction diagnostics (debug trace)
  std::optional<double> phi_star_rad;
};

enum class Phase { Initializing, Tracking };

// Converts an IMU sample stream into step events (orientation tracking +
// step detection + Weinberg length).
class PdrPipeline {
 public:
  PdrPipeline(const StepDetectorConfig& detector, const OrientationConfig& orientation,
              double beta, double rate_hz);

  std::optional<StepEvent> on_imu(const ImuSample& sample);

 private:
  StepDetector detector_;
  OrientationTracker orientation_;
  double beta_;
  double rate_hz_;
  std::optional<int64_t> last_t_ms_;
};

// 250 ms-cadence BLE estimation over a raw RSSI record stream: per-beacon
// Kalman filtering, windowing, estimator dispatch, and output smoothing.
class BleTracker {
 public:
  enum class Estimator { Gml, Gimle, Trilateration, Frbw };

  BleTracker(const FloorPlanMap* map, const BeaconRegistry* registry, const EngineConfig& config,
             Estimator estimator = Estimator::Gml);

  // Feeds one record; returns a fix when a window closed with a successful
  // estimate. Records must arrive in nondecreasing time order.
  std::optional<BleFix> on_rssi(int64_t t_ms, const std::string& uuid, double rssi_dbm);

  // Closes any window ending at or before t (time can be advanced by
  // non-RSSI events too).
  std::optional<BleFix> advance_to(int64_t t_ms);

  const std::optional<BleFix>& latest_fix() const { return latest_fix_; }
  int64_t fix_count() const { return fix_count_; }
  int64_t skipped_windows() const { return skipped_windows_; }
  // Filtered readings (all floors) of the most recently closed window.
  const std::vector<RssiObservation>& last_window_readings() const {
    return last_window_readings_;
  }
  int64_t closed_windows() const { return closed_windows_; }

 private:
  std::optional<BleFix> close_window(int64_t window_end);

  const FloorPlanMap* map_;
  const BeaconRegistry* registry_;
  EngineConfig config_;
  Estimator estimator_;
  std::vector<RssiKalman> filters_;
  std::vector<int64_t> last_heard_ms_;
  std::optional<int64_t> window_end_;
  std::optional<BleFix> latest_fix_;
  std::deque<Vec2> history_;
  std::vector<RssiObservation> last_window_readings_;
  int64_t fix_count_ = 0;
  int64_t skipped_windows_ = 0;
  int64_t closed_windows_ = 0;
};

// One positioning session: BLE estimation at a fixed cadence, step-triggered
// fusion and correction, BLE-mean initialization, divergence recovery, and
// FTA-gated floor switching. Events must arrive in timestamp order (RSSI
// before IMU/steps at equal timestamps).
class Session {
 public:
  Session(std::map<int, std::shared_ptr<const FloorPlanMap>> maps, BeaconRegistry registry,
          EngineConfig config, uint64_t seed, int start_floor);

  std::optional<BleFix> on_rssi(int64_t t_ms, const std::string& uuid, double rssi_dbm);
  std::optional<PoseOutput> on_step(const StepEvent& step);
  std::optional<PoseOutput> on_imu(const ImuSample& sample);
  // Barometric altitude slot for floor determination assistance; accepted
  // but currently unused.
  void on_altitude(int64_t t_ms, double altitude_m) {
    (void)t_ms;
    (void)altitude_m;
  }

  Phase phase() const { return phase_; }
  int floor() const { return floor_; }
  int floor_switch_count() const { return floor_switch_count_; }
  const std::optional<BleFix>& latest_fix() const { return ble_->latest_fix(); }
  std::optional<Vec2> last_position() const { return last_position_; }
  const ParticleSet* particles() const { return particles_ ? &*particles_ : nullptr; }
  const PpcState& ppc_state() const { return ppc_state_; }
  int64_t fix_count() const { return ble_->fix_count(); }
  int64_t skipped_windows() const { return ble_->skipped_windows(); }

 private:
  const FloorPlanMap& active_map() const { return *maps_.at(floor_); }
  void handle_fix(const BleFix& fix);
  void check_floor_transition();
  void switch_floor(int new_floor);

  std::map<int, std::shared_ptr<const FloorPlanMap>> maps_;
  BeaconRegistry registry_;
  EngineConfig config_;
  uint64_t seed_;
  int floor_;
  Phase phase_ = Phase::Initializing;
  std::unique_ptr<BleTracker> ble_;
  std::unique_ptr<PdrPipeline> pdr_;
  std::optional<ParticleSet> particles_;
  PpcState ppc_state_;
  std::optional<Vec2> last_position_;
  std::vector<Vec2> init_fixes_;
  std::optional<int64_t> init_start_ms_;
  int floor_switch_count_ = 0;
  int transition_candidate_ = -1;
  int transition_dwell_ = 0;
};

// Replay log record (one JSONL line).
struct ReplayEvent {
  enum class Kind { Init, Rssi, Step, Imu };
  Kind kind = Kind::Rssi;
  int64_t t_ms = 0;
  std::string uuid;
  double rssi_dbm = 0.0;
  double step_len = 0.0;
  double yaw = 0.0;
  ImuSample imu;
  Vec2 position;  // Init
  int floor = 0;  // Init
};

enum class Algorithm { FpBp, Bp, Pdr, Gml, Gimle, Trilateration, Frbw };

Algorithm algorithm_from_string(const std::string& name);
std::string algorithm_name(Algorithm a);

// Runs a full replay of an ordered event log under the chosen algorithm.
// FP-BP/BP emit one pose per step once tracking starts; BLE-only algorithms
// emit the latest fix at each step moment; PDR integrates steps from the
// log's init record.
std::vector<PoseOutput> run_replay(const std::map<int, std::shared_ptr<const FloorPlanMap>>& maps,
                                   const BeaconRegistry& registry,
                                   const std::vector<ReplayEvent>& events, Algorithm algorithm,
                                   const EngineConfig& config, uint64_t seed,
                                   std::vector<std::string>* trace = nullptr);

}  // namespace fpbp
