#include "fpbp/radio.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "fpbp/errors.hpp"

namespace fpbp {

using nlohmann::json;

double expected_distance(double true_d_m, double sigma_hat_db, double n) {
  if (true_d_m <= 0.0) throw ConfigError("expected_distance requires a positive distance");
  const double k = sigma_hat_db * std::log(10.0) / (10.0 * n);
  return true_d_m * std::exp(0.5 * k * k);
}

BeaconRegistry::BeaconRegistry(std::vector<Beacon> beacons) : beacons_(std::move(beacons)) {
  std::sort(beacons_.begin(), beacons_.end(),
            [](const Beacon& a, const Beacon& b) { return a.uuid < b.uuid; });
  for (size_t i = 1; i < beacons_.size(); ++i) {
    if (beacons_[i].uuid == beacons_[i - 1].uuid)
      throw ConfigError("duplicate beacon uuid: " + beacons_[i].uuid);
  }
}

std::optional<size_t> BeaconRegistry::index_of(const std::string& uuid) const {
  const auto it = std::lower_bound(
      beacons_.begin(), beacons_.end(), uuid,
      [](const Beacon& b, const std::string& u) { return b.uuid < u; });
  if (it == beacons_.end() || it->uuid != uuid) return std::nullopt;
  return static_cast<size_t>(it - beacons_.begin());
}

std::string BeaconRegistry::to_json() const {
  json j;
  j["schema"] = "fpbp-beacons/1";
  json arr = json::array();
  for (const auto& b : beacons_)
    arr.push_back({{"uuid", b.uuid}, {"x", b.position.x}, {"y", b.position.y}, {"floor", b.floor_id}});
  j["beacons"] = std::move(arr);
  return j.dump(2);
}

BeaconRegistry BeaconRegistry::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad beacon registry: ") + e.what());
  }
  const std::string schema = j.value("schema", "");
  if (schema.rfind("fpbp-beacons/1", 0) != 0)
    throw FormatError("unsupported beacon registry schema: " + schema);
  std::vector<Beacon> beacons;
  for (const auto& bj : j.at("beacons")) {
    beacons.push_back({bj.at("uuid").get<std::string>(),
                       {bj.at("x").get<double>(), bj.at("y").get<double>()},
                       bj.value("floor", 0)});
  }
  return BeaconRegistry(std::move(beacons));
}

BeaconRegistry BeaconRegistry::from_csv(const std::string& text) {
  std::vector<Beacon> beacons;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && line.rfind("uuid", 0) == 0) {
      first = false;
      continue;  // header
    }
    first = false;
    std::istringstream ls(line);
    std::string uuid, xs, ys, fs;
    if (!std::getline(ls, uuid, ',') || !std::getline(ls, xs, ',') || !std::getline(ls, ys, ','))
      throw FormatError("bad beacon csv line: " + line);
    std::getline(ls, fs, ',');
    beacons.push_back({uuid, {std::stod(xs), std::stod(ys)}, fs.empty() ? 0 : std::stoi(fs)});
  }
  return BeaconRegistry(std::move(beacons));
}

double RssiKalman::update(double raw_rssi_dbm) {
  if (!initialized_) {
    initialized_ = true;
    estimate_ = raw_rssi_dbm;
    variance_ = r_;
    return estimate_;
  }
  const double predicted_var = variance_ + q_;
  const double gain = predicted_var / (predicted_var + r_);
  estimate_ += gain * (raw_rssi_dbm - estimate_);
  variance_ = (1.0 - gain) * predicted_var;
  return estimate_;
}

std::vector<RssiObservation> select_top_beacons(const std::vector<RssiObservation>& readings,
                                                int n) {
  if (static_cast<int>(readings.size()) < std::max(n, 3))
    throw InsufficientBeaconsError("heard " + std::to_string(readings.size()) +
                                   " beacons, need " + std::to_string(std::max(n, 3)));
  std::vector<RssiObservation> sorted = readings;
  std::sort(sorted.begin(), sorted.end(), [](const RssiObservation& a, const RssiObservation& b) {
    if (a.rssi_dbm != b.rssi_dbm) return a.rssi_dbm > b.rssi_dbm;
    return a.beacon < b.beacon;
  });
  sorted.resize(n);
  return sorted;
}

std::vector<double> rssi_softmax(const std::vector<RssiObservation>& selected, double tau) {
  std::vector<double> rho(selected.size());
  double max_v = -std::numeric_limits<double>::infinity();
  for (const auto& o : selected) max_v = std::max(max_v, tau * o.rssi_dbm);
  double sum = 0.0;
  for (size_t i = 0; i < selected.size(); ++i) {
    rho[i] = std::exp(tau * selected[i].rssi_dbm - max_v);
    sum += rho[i];
  }
  for (double& v : rho) v /= sum;
  return rho;
}

std::vector<int> gml_candidates(const FloorPlanMap& map,
                                const std::vector<Vec2>& selected_positions,
                                const std::optional<Vec2>& prev_fix, const GmlConfig& config,
                                GmlMode* effective_mode) {
  const auto& grid = map.grid().points;
  auto gated = [&](const Vec2& g) {
    return !prev_fix || manhattan_distance(g, *prev_fix) < config.d0_m;
  };

  std::vector<int> out;
  if (config.mode == GmlMode::Dense) {
    const auto hull = convex_hull(selected_positions);
    for (int i = 0; i < static_cast<int>(grid.size()); ++i) {
      if (point_in_convex_interior(hull, grid[i]) && gated(grid[i])) out.push_back(i);
    }
    if (!out.empty()) {
      if (effective_mode != nullptr) *effective_mode = GmlMode::Dense;
      return out;
    }
  }
  for (int i = 0; i < static_cast<int>(grid.size()); ++i) {
    if (gated(grid[i])) out.push_back(i);
  }
  if (effective_mode != nullptr) *effective_mode = GmlMode::Sparse;
  if (out.empty()) {
    // Last resort: the unrestricted grid.
    for (int i = 0; i < static_cast<int>(grid.size()); ++i) out.push_back(i);
  }
  return out;
}

double gml_objective(const Vec2& y, const std::vector<Vec2>& beacon_positions,
                     const std::vector<double>& est_distances, const std::vector<double>& rho,
                     double kappa) {
  double f_mle = 0.0;
  double penalty = 0.0;
  for (size_t i = 0; i < beacon_positions.size(); ++i) {
    const double dist = std::max((y - beacon_positions[i]).norm(), 1e-3);
    const double diff = std::log10(est_distances[i]) - std::log10(dist);
    f_mle += diff * diff;
    penalty += rho[i] * dist;
  }
  return f_mle + kappa * penalty;
}

namespace {

// Argmin of the objective over the candidate indices; ties break toward the
// lower grid index so parallel evaluation stays deterministic.
Vec2 argmin_over(const FloorPlanMap& map, const std::vector<int>& candidates,
                 const std::vector<Vec2>& positions, const std::vector<double>& dists,
                 const std::vector<double>& rho, double kappa) {
  const auto& grid = map.grid().points;
  if (candidates.empty() || grid.empty())
    throw NoCandidatesError("no grid candidates available (degenerate map)");
  double best = std::numeric_limits<double>::infinity();
  int best_idx = candidates.front();
  for (int idx : candidates) {
    const double v = gml_objective(grid[idx], positions, dists, rho, kappa);
    if (v < best) {
      best = v;
      best_idx = idx;
    }
  }
  return grid[best_idx];
}

}  // namespace

Vec2 smooth_fix(const Vec2& raw, const std::deque<Vec2>& history, int smoothing_n) {
  Vec2 sum = raw;
  int count = 1;
  for (const Vec2& prev : history) {
    if (count >= smoothing_n) break;
    sum += prev;
    ++count;
  }
  return sum / static_cast<double>(count);
}

BleFix gml_estimate(const FloorPlanMap& map, const BeaconRegistry& registry,
                    const std::vector<RssiObservation>& readings,
                    const std::optional<Vec2>& prev_fix, const GmlConfig& config,
                    const PathLossModel& model, const std::deque<Vec2>& history, int64_t t_ms) {
  const auto selected = select_top_beacons(readings, config.n_select);
  std::vector<Vec2> positions;
  std::vector<double> dists;
  positions.reserve(selected.size());
  dists.reserve(selected.size());
  for (const auto& o : selected) {
    positions.push_back(registry.at(o.beacon).position);
    dists.push_back(rssi_to_distance(o.rssi_dbm, model));
  }
  const auto rho = rssi_softmax(selected, config.tau);

  GmlMode effective = config.mode;
  const auto candidates = gml_candidates(map, positions, prev_fix, config, &effective);
  const Vec2 y_star = argmin_over(map, candidates, positions, dists, rho, config.kappa);

  BleFix fix;
  fix.position = smooth_fix(y_star, history, config.smoothing_n);
  fix.t_ms = t_ms;
  fix.mode_used = effective;
  for (const auto& o : selected) fix.beacons_used.push_back(o.beacon);
  return fix;
}

Vec2 trilateration_lls(const BeaconRegistry& registry,
                       const std::vector<RssiObservation>& readings, const PathLossModel& model) {
  if (readings.size() < 3)
    throw InsufficientBeaconsError("trilateration needs at least 3 beacons");
  // Linearize by subtracting the last circle equation, then solve the 2x2
  // normal equations.
  const auto& last_obs = readings.back();
  const Vec2 bl = registry.at(last_obs.beacon).position;
  const double dl = rssi_to_distance(last_obs.rssi_dbm, model);

  double ata[2][2] = {{0, 0}, {0, 0}};
  double atb[2] = {0, 0};
  for (size_t i = 0; i + 1 < readings.size(); ++i) {
    const Vec2 bi = registry.at(readings[i].beacon).position;
    const double di = rssi_to_distance(readings[i].rssi_dbm, model);
    const double ax = 2.0 * (bl.x - bi.x);
    const double ay = 2.0 * (bl.y - bi.y);
    const double rhs = di * di - dl * dl - bi.norm_sq() + bl.norm_sq();
    ata[0][0] += ax * ax;
    ata[0][1] += ax * ay;
    ata[1][0] += ay * ax;
    ata[1][1] += ay * ay;
    atb[0] += ax * rhs;
    atb[1] += ay * rhs;
  }
  const double det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
  const double scale = std::max({std::abs(ata[0][0]), std::abs(ata[1][1]), 1.0});
  if (std::abs(det) < 1e-9 * scale * scale)
    throw SingularGeometryError("collinear beacon geometry");
  return {(atb[0] * ata[1][1] - atb[1] * ata[0][1]) / det,
          (atb[1] * ata[0][0] - atb[0] * ata[1][0]) / det};
}

Vec2 frbw_estimate(const BeaconRegistry& registry, const std::vector<RssiObservation>& readings,
                   const PathLossModel& model, double weight_degree_g) {
  const auto top = select_top_beacons(readings, 3);
  double weight_sum = 0.0;
  Vec2 acc{0.0, 0.0};
  for (const auto& o : top) {
    const double d = std::max(rssi_to_distance(o.rssi_dbm, model), 1e-3);
    const double w = std::pow(1.0 / d, weight_degree_g);
    acc += registry.at(o.beacon).position * w;
    weight_sum += w;
  }
  return acc / weight_sum;
}

Vec2 gimle_estimate(const FloorPlanMap& map, const BeaconRegistry& registry,
                    const std::vector<RssiObservation>& readings, const PathLossModel& model,
                    int n_select) {
  const auto selected = select_top_beacons(readings, n_select);
  std::vector<Vec2> positions;
  std::vector<double> dists;
  for (const auto& o : selected) {
    positions.push_back(registry.at(o.beacon).position);
    dists.push_back(rssi_to_distance(o.rssi_dbm, model));
  }
  const std::vector<double> rho(selected.size(), 0.0);
  std::vector<int> all(map.grid().points.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return argmin_over(map, all, positions, dists, rho, 0.0);
}

}  // namespace fpbp
