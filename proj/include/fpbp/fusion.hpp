#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpbp/geometry.hpp"
#include "fpbp/rng.hpp"

namespace fpbp {

struct StepEvent {
  int64_t t_ms = 0;
  double length_m = 0.0;
  double yaw_rad = 0.0;  // heading in the map frame, (-pi, pi]

  Vec2 vector() const { return {length_m * std::cos(yaw_rad), length_m * std::sin(yaw_rad)}; }
};

struct FusionConfig {
  int particle_count = 500;
  double step_noise_m = 0.05;        // |nu_s| bound (uniform)
  double heading_noise_rad = 0.17453292519943295;  // |nu_theta| bound, 10 deg
  double sigma_x_sq = 0.1;           // observation variance (m^2)
  // Resample only when ESS falls below this fraction of the particle count;
  // 0 resamples unconditionally.
  double ess_gate_fraction = 0.0;
};

// Weighted position hypotheses with counter-based noise streams so that a
// given (seed, input sequence) replays bit-for-bit.
class ParticleSet {
 public:
  static ParticleSet init(const Vec2& x0, const FusionConfig& config, uint64_t seed);

  // Moves every particle by (s + nu_s) in direction (yaw + nu_theta), noise
  // uniform within the configured bounds.
  void propagate(const StepEvent& step);

  // Gaussian reweighting toward the BLE fix, then normalization.
  // Throws AllZeroWeightsError when every weight underflows (divergence).
  void reweight(const Vec2& ble_fix);

  // Systematic resampling; weights become uniform.
  void resample();

  // Weighted mean position.
  Vec2 estimate() const;

  // Effective sample size 1 / sum(w^2).
  double effective_sample_size() const;

  // Rigid translation of all particles (post-correction update).
  void translate(const Vec2& delta);

  // Collapse to x (divergence recovery); weights reset to uniform.
  void reinitialize(const Vec2& x);

  size_t size() const { return positions_.size(); }
  const std::vector<Vec2>& positions() const { return positions_; }
  const std::vector<double>& weights() const { return weights_; }
  const FusionConfig& config() const { return config_; }

  std::string snapshot_json() const;

 private:
  FusionConfig config_;
  uint64_t seed_ = 0;
  uint64_t propagate_count_ = 0;
  uint64_t resample_count_ = 0;
  std::vector<Vec2> positions_;
  std::vector<double> weights_;
};

}  // namespace fpbp
