#include "fpbp/fusion.hpp"

#include <cmath>

#include <json.hpp>

#include "fpbp/errors.hpp"

namespace fpbp {

ParticleSet ParticleSet::init(const Vec2& x0, const FusionConfig& config, uint64_t seed) {
  if (config.particle_count < 1) throw ConfigError("particle count must be >= 1");
  if (config.sigma_x_sq <= 0.0) throw ConfigError("sigma_x^2 must be positive");
  ParticleSet set;
  set.config_ = config;
  set.seed_ = seed;
  set.positions_.assign(config.particle_count, x0);
  set.weights_.assign(config.particle_count, 1.0 / config.particle_count);
  return set;
}

void ParticleSet::propagate(const StepEvent& step) {
  // Per-update substream keyed by the propagate counter; two uniforms per
  // particle in a fixed order.
  CounterRng rng(seed_ ^ (propagate_count_ * 0x9e3779b97f4a7c15ULL),
                 rng_stream::kParticlePropagate);
  ++propagate_count_;
  for (auto& p : positions_) {
    const double nu_s = rng.next_uniform(-config_.step_noise_m, config_.step_noise_m);
    const double nu_theta = rng.next_uniform(-config_.heading_noise_rad, config_.heading_noise_rad);
    const double len = step.length_m + nu_s;
    const double yaw = step.yaw_rad + nu_theta;
    p += Vec2{len * std::cos(yaw), len * std::sin(yaw)};
  }
}

void ParticleSet::reweight(const Vec2& ble_fix) {
  std::vector<double> next(weights_.size());
  double sum = 0.0;
  for (size_t i = 0; i < positions_.size(); ++i) {
    const double dist_sq = (ble_fix - positions_[i]).norm_sq();
    next[i] = weights_[i] * std::exp(-dist_sq / (2.0 * config_.sigma_x_sq));
    sum += next[i];
  }
  // Leave the weights untouched on divergence so the caller can recover.
  if (sum <= 0.0 || !std::isfinite(sum))
    throw AllZeroWeightsError("all particle weights vanished (filter divergence)");
  for (auto& w : next) w /= sum;
  weights_ = std::move(next);
}

void ParticleSet::resample() {
  const size_t m = positions_.size();
  CounterRng rng(seed_ ^ (resample_count_ * 0xd1b54a32d192ed03ULL),
                 rng_stream::kParticleResample);
  ++resample_count_;
  const double start = rng.next_double() / static_cast<double>(m);

  std::vector<Vec2> next;
  next.reserve(m);
  double cumulative = weights_[0];
  size_t i = 0;
  for (size_t k = 0; k < m; ++k) {
    const double u = start + static_cast<double>(k) / static_cast<double>(m);
    while (cumulative < u && i + 1 < m) cumulative += weights_[++i];
    next.push_back(positions_[i]);
  }
  positions_ = std::move(next);
  weights_.assign(m, 1.0 / static_cast<double>(m));
}

double ParticleSet::effective_sample_size() const {
  double sum_sq = 0.0;
  for (double w : weights_) sum_sq += w * w;
  return sum_sq > 0.0 ? 1.0 / sum_sq : 0.0;
}

Vec2 ParticleSet::estimate() const {
  Vec2 acc{0.0, 0.0};
  for (size_t i = 0; i < positions_.size(); ++i) acc += positions_[i] * weights_[i];
  return acc;
}

void ParticleSet::translate(const Vec2& delta) {
  for (auto& p : positions_) p += delta;
}

void ParticleSet::reinitialize(const Vec2& x) {
  positions_.assign(positions_.size(), x);
  weights_.assign(positions_.size(), 1.0 / static_cast<double>(positions_.size()));
}

std::string ParticleSet::snapshot_json() const {
  nlohmann::json j;
  j["schema"] = "fpbp-particles/1";
  nlohmann::json arr = nlohmann::json::array();
  for (size_t i = 0; i < positions_.size(); ++i)
    arr.push_back({positions_[i].x, positions_[i].y, weights_[i]});
  j["particles"] = std::move(arr);
  return j.dump();
}

}  // namespace fpbp
