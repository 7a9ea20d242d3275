#include "fpbp/sim.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "fpbp/errors.hpp"
#include "fpbp/ppc.hpp"
#include "fpbp/rng.hpp"

namespace fpbp {

using nlohmann::json;

std::string Scenario::to_json() const {
  json j;
  j["schema"] = "fpbp-scenario/1";
  json maps = json::object();
  for (const auto& [floor, path] : map_paths) maps[std::to_string(floor)] = path;
  j["maps"] = std::move(maps);
  j["beacons"] = beacons_path;
  j["start_floor"] = start_floor;
  j["speed_mps"] = speed_mps;
  j["stride_m"] = stride_m;
  j["pathloss"] = {{"n", pathloss.n}, {"r0_dbm", pathloss.r0_dbm}, {"sigma_db", pathloss.sigma_db}};
  j["beacon_height_m"] = beacon_height_m;
  j["device_height_m"] = device_height_m;
  j["cross_floor_atten_db"] = cross_floor_atten_db;
  j["broadcast_interval_ms"] = broadcast_interval_ms;
  j["imu_rate_hz"] = imu_rate_hz;
  j["heading_noise_std_rad"] = heading_noise_std_rad;
  j["steplen_noise_std_m"] = steplen_noise_std_m;
  j["heading_drift_rad_per_step"] = heading_drift_rad_per_step;
  j["step_mode"] = step_mode == StepLogMode::Direct ? "direct" : "imu_sinusoid";
  j["seed"] = seed;
  json legs = json::array();
  for (const auto& leg : path) {
    json lj;
    if (!leg.points.empty()) {
      lj["floor"] = leg.floor;
      json pts = json::array();
      for (const auto& p : leg.points) pts.push_back({p.x, p.y});
      lj["points"] = std::move(pts);
    } else {
      lj["dwell_s"] = leg.dwell_s;
      if (leg.switch_to_floor) lj["switch_to_floor"] = *leg.switch_to_floor;
    }
    legs.push_back(std::move(lj));
  }
  j["path"] = std::move(legs);
  return j.dump(2);
}

Scenario Scenario::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad scenario: ") + e.what());
  }
  const std::string schema = j.value("schema", "");
  if (schema.rfind("fpbp-scenario/1", 0) != 0)
    throw FormatError("unsupported scenario schema: " + schema);
  Scenario s;
  for (const auto& [key, val] : j.at("maps").items())
    s.map_paths[std::stoi(key)] = val.get<std::string>();
  s.beacons_path = j.at("beacons").get<std::string>();
  s.start_floor = j.value("start_floor", s.map_paths.begin()->first);
  s.speed_mps = j.value("speed_mps", 1.0);
  s.stride_m = j.value("stride_m", 0.6);
  if (j.contains("pathloss")) {
    const auto& pl = j["pathloss"];
    s.pathloss.n = pl.value("n", 2.2);
    s.pathloss.r0_dbm = pl.value("r0_dbm", -59.0);
    s.pathloss.sigma_db = pl.value("sigma_db", 4.0);
  }
  s.beacon_height_m = j.value("beacon_height_m", 2.5);
  s.device_height_m = j.value("device_height_m", 1.2);
  s.cross_floor_atten_db = j.value("cross_floor_atten_db", 20.0);
  s.broadcast_interval_ms = j.value("broadcast_interval_ms", static_cast<int64_t>(200));
  s.imu_rate_hz = j.value("imu_rate_hz", 60.0);
  s.heading_noise_std_rad = j.value("heading_noise_std_rad", 0.05);
  s.steplen_noise_std_m = j.value("steplen_noise_std_m", 0.02);
  s.heading_drift_rad_per_step = j.value("heading_drift_rad_per_step", 0.0);
  s.step_mode =
      j.value("step_mode", "direct") == "imu_sinusoid" ? StepLogMode::ImuSinusoid
                                                       : StepLogMode::Direct;
  s.seed = j.value("seed", static_cast<uint64_t>(1));
  for (const auto& lj : j.at("path")) {
    PathLeg leg;
    if (lj.contains("points")) {
      leg.floor = lj.at("floor").get<int>();
      for (const auto& p : lj["points"]) leg.points.push_back({p.at(0), p.at(1)});
    } else {
      leg.dwell_s = lj.at("dwell_s").get<double>();
      if (lj.contains("switch_to_floor")) leg.switch_to_floor = lj["switch_to_floor"].get<int>();
    }
    s.path.push_back(std::move(leg));
  }
  if (s.path.empty() || s.path.front().points.empty())
    throw FormatError("scenario path must start with a walk leg");
  return s;
}

Vec2 Truth::position_at(int64_t t_ms) const {
  if (knots.empty()) return {};
  if (t_ms <= knots.front().t_ms) return knots.front().position;
  for (size_t i = 1; i < knots.size(); ++i) {
    if (t_ms <= knots[i].t_ms) {
      const auto& a = knots[i - 1];
      const auto& b = knots[i];
      if (b.t_ms == a.t_ms) return b.position;
      const double u = static_cast<double>(t_ms - a.t_ms) / static_cast<double>(b.t_ms - a.t_ms);
      return a.position + (b.position - a.position) * u;
    }
  }
  return knots.back().position;
}

int Truth::floor_at(int64_t t_ms) const {
  int floor = knots.empty() ? 0 : knots.front().floor;
  for (const auto& k : knots) {
    if (k.t_ms > t_ms) break;
    floor = k.floor;
  }
  return floor;
}

Truth generate_truth(const Scenario& scenario,
                     const std::map<int, std::shared_ptr<const FloorPlanMap>>& maps) {
  if (scenario.speed_mps <= 0.0) throw ConfigError("speed must be positive");
  Truth truth;
  double t_s = 0.0;
  Vec2 pos;
  int floor = scenario.start_floor;
  bool started = false;
  double distance_since_step = 0.0;
  int segment_index = 0;

  for (const auto& leg : scenario.path) {
    if (leg.points.empty()) {
      // Stationary dwell; a floor change happens mid-dwell (elevator ride).
      if (!started) throw ConfigError("scenario cannot start with a dwell leg");
      if (leg.switch_to_floor) {
        const double half = leg.dwell_s / 2.0;
        truth.knots.push_back({static_cast<int64_t>((t_s + half) * 1000), pos, floor});
        floor = *leg.switch_to_floor;
        truth.knots.push_back({static_cast<int64_t>((t_s + half) * 1000), pos, floor});
      }
      t_s += leg.dwell_s;
      truth.knots.push_back({static_cast<int64_t>(t_s * 1000), pos, floor});
      continue;
    }

    const auto map_it = maps.find(leg.floor);
    if (map_it == maps.end())
      throw ConfigError("no map for floor " + std::to_string(leg.floor));
    const FloorPlanMap& map = *map_it->second;

    size_t start_idx = 0;
    if (!started) {
      pos = leg.points.front();
      floor = leg.floor;
      truth.knots.push_back({0, pos, floor});
      started = true;
      start_idx = 1;
    } else {
      if ((leg.points.front() - pos).norm() > 1e-9)
        throw ConfigError("walk legs must be contiguous with the previous position");
      if (leg.floor != floor) throw ConfigError("floor changes require a dwell leg");
      start_idx = 1;
    }

    for (size_t i = start_idx; i < leg.points.size(); ++i, ++segment_index) {
      const Vec2 target = leg.points[i];
      // Ground truth must stay legal: walls block, doors and FTAs do not.
      const auto ray = raycast(map, pos, target, kWallOnly);
      if (ray.hit)
        throw InfeasiblePathError("trajectory segment " + std::to_string(segment_index) +
                                      " crosses a wall",
                                  segment_index);
      const double seg_len = (target - pos).norm();
      if (seg_len <= 0.0) continue;
      const Vec2 dir = (target - pos) / seg_len;
      const double heading = std::atan2(dir.y, dir.x);
      double walked = 0.0;
      while (walked + (scenario.stride_m - distance_since_step) <= seg_len + 1e-12) {
        walked += scenario.stride_m - distance_since_step;
        distance_since_step = 0.0;
        const Vec2 step_pos = pos + dir * walked;
        const double step_t = t_s + walked / scenario.speed_mps;
        truth.steps.push_back({static_cast<int64_t>(step_t * 1000), step_pos, floor, heading,
                               scenario.stride_m});
      }
      distance_since_step += seg_len - walked;
      t_s += seg_len / scenario.speed_mps;
      pos = target;
      truth.knots.push_back({static_cast<int64_t>(t_s * 1000), pos, floor});
    }
  }
  return truth;
}

std::vector<ReplayEvent> synthesize_rssi(const Truth& truth, const BeaconRegistry& registry,
                                         const Scenario& scenario, uint64_t seed) {
  std::vector<ReplayEvent> events;
  const int64_t end = truth.end_ms();
  const double dz = scenario.beacon_height_m - scenario.device_height_m;
  for (size_t b = 0; b < registry.size(); ++b) {
    const Beacon& beacon = registry.at(b);
    CounterRng rng(seed ^ (0x517cc1b727220a95ULL * (b + 1)), rng_stream::kSimRssi);
    // Stagger broadcast phases so beacons do not tick in lockstep.
    const int64_t offset = static_cast<int64_t>((b * 31) % scenario.broadcast_interval_ms);
    for (int64_t t = offset; t <= end; t += scenario.broadcast_interval_ms) {
      const Vec2 user = truth.position_at(t);
      const int user_floor = truth.floor_at(t);
      const double planar = (user - beacon.position).norm();
      const double d3 = std::max(std::sqrt(planar * planar + dz * dz), 0.1);
      double rssi = rssi_from_distance(d3, scenario.pathloss) +
                    scenario.pathloss.sigma_db * rng.next_gaussian();
      if (beacon.floor_id != user_floor) rssi -= scenario.cross_floor_atten_db;
      ReplayEvent ev;
      ev.kind = ReplayEvent::Kind::Rssi;
      ev.t_ms = t;
      ev.uuid = beacon.uuid;
      ev.rssi_dbm = rssi;
      events.push_back(std::move(ev));
    }
  }
  return events;
}

std::vector<ReplayEvent> synthesize_steps(const Truth& truth, const Scenario& scenario,
                                          uint64_t seed) {
  std::vector<ReplayEvent> events;
  if (scenario.step_mode == StepLogMode::Direct) {
    CounterRng rng(seed, rng_stream::kSimSteps);
    for (size_t k = 0; k < truth.steps.size(); ++k) {
      const auto& s = truth.steps[k];
      ReplayEvent ev;
      ev.kind = ReplayEvent::Kind::Step;
      ev.t_ms = s.t_ms;
      ev.step_len =
          std::max(s.stride_m + scenario.steplen_noise_std_m * rng.next_gaussian(), 0.05);
      ev.yaw = wrap_angle(s.heading + scenario.heading_noise_std_rad * rng.next_gaussian() +
                          scenario.heading_drift_rad_per_step * static_cast<double>(k + 1));
      events.push_back(std::move(ev));
    }
    return events;
  }

  // Synthetic gait: vertical-acceleration sinusoid whose peaks land on the
  // step schedule, plus consistent attitude/gravity/mag channels.
  const double step_period_s = scenario.stride_m / scenario.speed_mps;
  const double freq_hz = 1.0 / step_period_s;
  const double amplitude = 2.0;
  const double dt = 1.0 / scenario.imu_rate_hz;
  const int64_t end = truth.end_ms();
  const double t0 = step_period_s - 0.25 * step_period_s;  // first peak at the first step
  size_t next_step = 0;
  std::optional<double> prev_heading;
  for (double t_s = 0.0; t_s * 1000.0 <= static_cast<double>(end); t_s += dt) {
    const int64_t t_ms = static_cast<int64_t>(std::llround(t_s * 1000.0));
    double heading = 0.0;
    while (next_step + 1 < truth.steps.size() && truth.steps[next_step].t_ms < t_ms) ++next_step;
    if (!truth.steps.empty())
      heading = truth.steps[std::min(next_step, truth.steps.size() - 1)].heading;

    // Moving segments only; dwells produce a flat signal.
    const Vec2 before = truth.position_at(t_ms);
    const Vec2 after = truth.position_at(t_ms + 50);
    const bool moving = (after - before).norm() > 1e-6;
    const double z = moving ? amplitude * std::sin(2.0 * M_PI * freq_hz * (t_s - t0)) : 0.0;

    ImuSample sample;
    sample.t_ms = t_ms;
    // Device +y axis faces the heading; the quaternion rotates DCS into the
    // map-aligned frame, and the gyro carries the turn rate consistently.
    const double yaw = heading - M_PI / 2.0;
    const Quat q{0.0, 0.0, std::sin(yaw / 2.0), std::cos(yaw / 2.0)};
    sample.rotation = q;
    sample.accel_linear = Vec3{0.0, 0.0, z};
    sample.accel_gravity = Vec3{0.0, 0.0, 9.81};
    const Mat3 r = quat_to_rotmat(q).transposed();
    sample.mag = r * Vec3{0.0, 22.0, -40.0};
    const double turn_rate =
        prev_heading ? wrap_angle(heading - *prev_heading) / dt : 0.0;
    prev_heading = heading;
    sample.gyro = Vec3{0.0, 0.0, turn_rate};
    ReplayEvent ev;
    ev.kind = ReplayEvent::Kind::Imu;
    ev.t_ms = t_ms;
    ev.imu = sample;
    events.push_back(std::move(ev));
  }
  return events;
}

std::vector<ReplayEvent> build_event_log(const Truth& truth, const BeaconRegistry& registry,
                                         const Scenario& scenario) {
  std::vector<ReplayEvent> events;
  ReplayEvent init;
  init.kind = ReplayEvent::Kind::Init;
  init.t_ms = 0;
  init.position = truth.knots.empty() ? Vec2{} : truth.knots.front().position;
  init.floor = truth.knots.empty() ? scenario.start_floor : truth.knots.front().floor;
  events.push_back(std::move(init));

  auto rssi = synthesize_rssi(truth, registry, scenario, scenario.seed);
  auto steps = synthesize_steps(truth, scenario, scenario.seed);
  events.insert(events.end(), rssi.begin(), rssi.end());
  events.insert(events.end(), steps.begin(), steps.end());
  std::stable_sort(events.begin(), events.end(), [](const ReplayEvent& a, const ReplayEvent& b) {
    auto rank = [](const ReplayEvent& e) {
      if (e.kind == ReplayEvent::Kind::Init) return 0;
      if (e.kind == ReplayEvent::Kind::Rssi) return 1;
      return 2;
    };
    if (a.t_ms != b.t_ms) return a.t_ms < b.t_ms;
    return rank(a) < rank(b);
  });
  return events;
}

double nearest_rank_quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::min(std::max<size_t>(rank, 1), values.size()) - 1];
}

std::vector<std::pair<double, double>> cdf_table(const std::vector<double>& errors) {
  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> rows;
  rows.reserve(sorted.size());
  for (size_t i = 0; i < sorted.size(); ++i)
    rows.emplace_back(sorted[i], static_cast<double>(i + 1) / static_cast<double>(sorted.size()));
  return rows;
}

MetricsReport evaluate(const std::vector<PoseOutput>& outputs, const std::vector<TruthStep>& truth,
                       const std::map<int, std::shared_ptr<const FloorPlanMap>>& maps) {
  // Step-index alignment; estimators may skip leading steps while BLE
  // initialization runs, so outputs map onto the truth tail.
  if (outputs.size() > truth.size())
    throw LengthMismatchError("outputs (" + std::to_string(outputs.size()) + ") vs truth (" +
                              std::to_string(truth.size()) + ") length mismatch");
  const size_t offset = truth.size() - outputs.size();
  MetricsReport report;
  report.errors.reserve(outputs.size());
  for (size_t i = 0; i < outputs.size(); ++i)
    report.errors.push_back((outputs[i].position - truth[i + offset].position).norm());

  if (!report.errors.empty()) {
    double sum = 0.0;
    for (double e : report.errors) sum += e;
    report.mpe = sum / static_cast<double>(report.errors.size());
    double var = 0.0;
    for (double e : report.errors) var += (e - report.mpe) * (e - report.mpe);
    report.std_dev = std::sqrt(var / static_cast<double>(report.errors.size()));
    report.p50 = nearest_rank_quantile(report.errors, 0.50);
    report.p80 = nearest_rank_quantile(report.errors, 0.80);
  }

  for (size_t i = 1; i < outputs.size(); ++i) {
    const auto& a = outputs[i - 1];
    const auto& b = outputs[i];
    if (a.floor != b.floor) continue;
    if (b.ble_reset || b.diverged || a.ble_reset || a.diverged) continue;
    const auto map_it = maps.find(b.floor);
    if (map_it == maps.end()) continue;
    if (raycast(*map_it->second, a.position, b.position, kWallOnly).hit) ++report.wall_crossings;
  }
  return report;
}

std::string MetricsReport::to_json() const {
  json j;
  j["schema"] = "fpbp-metrics/1";
  j["mpe_m"] = mpe;
  j["p50_m"] = p50;
  j["p80_m"] = p80;
  j["std_m"] = std_dev;
  j["count"] = errors.size();
  j["wall_crossings"] = wall_crossings;
  return j.dump(2);
}

}  // namespace fpbp
