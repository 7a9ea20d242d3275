#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "fpbp/floorplan.hpp"
#include "fpbp/geometry.hpp"

namespace fpbp {

// Log-distance path loss: R = -10 n log10(d) + R0 + N(0, sigma^2).
struct PathLossModel {
  double n = 2.2;
  double r0_dbm = -59.0;
  double sigma_db = 4.0;
};

inline double rssi_from_distance(double d_m, const PathLossModel& model) {
  return -10.0 * model.n * std::log10(d_m) + model.r0_dbm;
}

// Inverts the path loss model: d = 10^((R0 - rssi) / (10 n)).
inline double rssi_to_distance(double rssi_dbm, const PathLossModel& model) {
  return std::pow(10.0, (model.r0_dbm - rssi_dbm) / (10.0 * model.n));
}

// Mean of the log-Gaussian distance estimate for a true distance d and RSSI
// noise sigma_hat: d * exp(0.5 (sigma_hat ln10 / (10 n))^2).
double expected_distance(double true_d_m, double sigma_hat_db, double n);

struct Beacon {
  std::string uuid;
  Vec2 position;
  int floor_id = 0;
};

// Beacons sorted by uuid; index order is the tie-break order everywhere.
class BeaconRegistry {
 public:
  BeaconRegistry() = default;
  explicit BeaconRegistry(std::vector<Beacon> beacons);

  size_t size() const { return beacons_.size(); }
  const Beacon& at(size_t i) const { return beacons_[i]; }
  std::optional<size_t> index_of(const std::string& uuid) const;
  const std::vector<Beacon>& beacons() const { return beacons_; }

  std::string to_json() const;
  static BeaconRegistry from_json(const std::string& text);
  static BeaconRegistry from_csv(const std::string& text);

 private:
  std::vector<Beacon> beacons_;
};

// Scalar Kalman filter with a random-walk signal model; smooths one beacon's
// RSSI stream. The first sample initializes the estimate.
class RssiKalman {
 public:
  RssiKalman(double process_noise_q = 0.16, double measurement_noise_r = 16.0)
      : q_(process_noise_q), r_(measurement_noise_r) {}

  double update(double raw_rssi_dbm);
  bool initialized() const { return initialized_; }
  double estimate() const { return estimate_; }
  double variance() const { return variance_; }

 private:
  double q_;
  double r_;
  bool initialized_ = false;
  double estimate_ = 0.0;
  double variance_ = 0.0;
};

// One filtered observation; `beacon` indexes into the registry.
struct RssiObservation {
  int beacon = -1;
  double rssi_dbm = 0.0;
};

enum class GmlMode { Dense, Sparse };

struct GmlConfig {
  int n_select = 4;     // beacons entering the objective (>= 3)
  double kappa = 0.01;  // penalty weight
  double tau = 0.5;     // softmax temperature over filtered RSSI
  // Manhattan gate around the previous fix: wide enough that per-interval
  // walking distance plus a 4-sigma ranging error never binds, so the gate
  // only clips genuine outlier jumps.
  double d0_m = 6.0;
  int smoothing_n = 4;  // output averaging window (1 = off)
  GmlMode mode = GmlMode::Dense;
};

struct BleFix {
  Vec2 position;
  int64_t t_ms = 0;
  GmlMode mode_used = GmlMode::Dense;
  std::vector<int> beacons_used;
};

// Strongest-N selection by filtered RSSI; exact ties resolve toward the
// lexicographically smaller uuid (= lower registry index).
// Throws InsufficientBeaconsError when fewer than N beacons were heard.
std::vector<RssiObservation> select_top_beacons(const std::vector<RssiObservation>& readings,
                                                int n);

// Softmax over tau * rssi; weights sum to 1.
std::vector<double> rssi_softmax(const std::vector<RssiObservation>& selected, double tau);

// Candidate grid indices for the configured mode. Dense intersects the grid
// with the strict interior of the selected beacons' convex hull plus the
// Manhattan gate; Sparse drops the hull. The gate only applies when a
// previous fix exists. Fallback ladder on empty sets: Dense -> Sparse ->
// ungated grid.
std::vector<int> gml_candidates(const FloorPlanMap& map,
                                const std::vector<Vec2>& selected_positions,
                                const std::optional<Vec2>& prev_fix, const GmlConfig& config,
                                GmlMode* effective_mode = nullptr);

// F_MLE(y) + kappa * sum_i rho_i ||y - b_i||, with eta_i == 1.
double gml_objective(const Vec2& y, const std::vector<Vec2>& beacon_positions,
                     const std::vector<double>& est_distances, const std::vector<double>& rho,
                     double kappa);

// One grid-based maximum-likelihood estimate. `history` holds previous fix
// positions, most recent first; the result is averaged with up to
// smoothing_n - 1 of them and pushed onto the history by the caller.
// Throws NoCandidatesError when the grid itself is empty and
// InsufficientBeaconsError via selection.
BleFix gml_estimate(const FloorPlanMap& map, const BeaconRegistry& registry,
                    const std::vector<RssiObservation>& readings,
                    const std::optional<Vec2>& prev_fix, const GmlConfig& config,
                    const PathLossModel& model, const std::deque<Vec2>& history, int64_t t_ms);

// Baselines (no smoothing applied here; callers share the same averaging as
// GML for comparability).
Vec2 trilateration_lls(const BeaconRegistry& registry,
                       const std::vector<RssiObservation>& readings, const PathLossModel& model);
Vec2 frbw_estimate(const BeaconRegistry& registry, const std::vector<RssiObservation>& readings,
                   const PathLossModel& model, double weight_degree_g = 5.0);
Vec2 gimle_estimate(const FloorPlanMap& map, const BeaconRegistry& registry,
                    const std::vector<RssiObservation>& readings, const PathLossModel& model,
                    int n_select);

// Shared output averaging (mean of the new result and up to n-1 previous
// results, newest first in `history`).
Vec2 smooth_fix(const Vec2& raw, const std::deque<Vec2>& history, int smoothing_n);

}  // namespace fpbp
