#include "fpbp/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fpbp/errors.hpp"

namespace fpbp {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << content;
}

Palette palette_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad palette: ") + e.what());
  }
  const std::string schema = j.value("schema", "");
  if (schema.rfind("fpbp-palette/1", 0) != 0)
    throw FormatError("unsupported palette schema: " + schema);
  Palette p;
  p.walkable = rgb_from_hex(j.at("walkable").get<std::string>());
  p.wall = rgb_from_hex(j.at("wall").get<std::string>());
  p.door = rgb_from_hex(j.at("door").get<std::string>());
  p.fta = rgb_from_hex(j.at("fta").get<std::string>());
  return p;
}

std::string palette_to_json(const Palette& palette) {
  json j;
  j["schema"] = "fpbp-palette/1";
  j["walkable"] = rgb_to_hex(palette.walkable);
  j["wall"] = rgb_to_hex(palette.wall);
  j["door"] = rgb_to_hex(palette.door);
  j["fta"] = rgb_to_hex(palette.fta);
  return j.dump(2);
}

MapManifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad manifest: ") + e.what());
  }
  const std::string schema = j.value("schema", "");
  if (schema.rfind("fpbp-manifest/1", 0) != 0)
    throw FormatError("unsupported manifest schema: " + schema);
  MapManifest m;
  m.resolution_r = j.at("resolution_r").get<double>();
  m.grid_interval_m = j.at("grid_interval_m").get<double>();
  m.floor_id = j.value("floor_id", 0);
  m.north_offset_rad = j.value("north_offset_rad", 0.0);
  return m;
}

std::string manifest_to_json(const MapManifest& manifest) {
  json j;
  j["schema"] = "fpbp-manifest/1";
  j["resolution_r"] = manifest.resolution_r;
  j["grid_interval_m"] = manifest.grid_interval_m;
  j["floor_id"] = manifest.floor_id;
  j["north_offset_rad"] = manifest.north_offset_rad;
  return j.dump(2);
}

namespace {

json event_to_json(const ReplayEvent& ev) {
  json j;
  j["t_ms"] = ev.t_ms;
  switch (ev.kind) {
    case ReplayEvent::Kind::Init:
      j["type"] = "init";
      j["x"] = ev.position.x;
      j["y"] = ev.position.y;
      j["floor"] = ev.floor;
      break;
    case ReplayEvent::Kind::Rssi:
      j["type"] = "rssi";
      j["uuid"] = ev.uuid;
      j["rssi_dbm"] = ev.rssi_dbm;
      break;
    case ReplayEvent::Kind::Step:
      j["type"] = "step";
      j["step_len"] = ev.step_len;
      j["yaw"] = ev.yaw;
      break;
    case ReplayEvent::Kind::Imu: {
      j["type"] = "imu";
      auto vec = [](const Vec3& v) { return json::array({v.x, v.y, v.z}); };
      if (ev.imu.accel_linear) j["acc"] = vec(*ev.imu.accel_linear);
      if (ev.imu.accel_gravity) j["acc_g"] = vec(*ev.imu.accel_gravity);
      if (ev.imu.gyro) j["gyro"] = vec(*ev.imu.gyro);
      if (ev.imu.mag) j["mag"] = vec(*ev.imu.mag);
      if (ev.imu.rotation)
        j["quat"] = json::array(
            {ev.imu.rotation->x, ev.imu.rotation->y, ev.imu.rotation->z, ev.imu.rotation->w});
      break;
    }
  }
  return j;
}

ReplayEvent event_from_json(const json& j) {
  ReplayEvent ev;
  ev.t_ms = j.at("t_ms").get<int64_t>();
  const std::string type = j.at("type").get<std::string>();
  if (type == "init") {
    ev.kind = ReplayEvent::Kind::Init;
    ev.position = {j.at("x").get<double>(), j.at("y").get<double>()};
    ev.floor = j.value("floor", 0);
  } else if (type == "rssi") {
    ev.kind = ReplayEvent::Kind::Rssi;
    ev.uuid = j.at("uuid").get<std::string>();
    ev.rssi_dbm = j.at("rssi_dbm").get<double>();
  } else if (type == "step") {
    ev.kind = ReplayEvent::Kind::Step;
    ev.step_len = j.at("step_len").get<double>();
    ev.yaw = j.at("yaw").get<double>();
  } else if (type == "imu") {
    ev.kind = ReplayEvent::Kind::Imu;
    ev.imu.t_ms = ev.t_ms;
    auto vec = [&](const char* key) -> std::optional<Vec3> {
      if (!j.contains(key)) return std::nullopt;
      const auto& a = j.at(key);
      return Vec3{a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
    };
    ev.imu.accel_linear = vec("acc");
    ev.imu.accel_gravity = vec("acc_g");
    ev.imu.gyro = vec("gyro");
    ev.imu.mag = vec("mag");
    if (j.contains("quat")) {
      const auto& q = j.at("quat");
      ev.imu.rotation = Quat{q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                             q.at(3).get<double>()};
    }
  } else {
    throw FormatError("unknown event type: " + type);
  }
  return ev;
}

}  // namespace

std::string event_log_to_jsonl(const std::vector<ReplayEvent>& events) {
  std::ostringstream out;
  for (const auto& ev : events) out << event_to_json(ev).dump() << '\n';
  return out.str();
}

std::vector<ReplayEvent> event_log_from_jsonl(const std::string& text) {
  std::vector<ReplayEvent> events;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      events.push_back(event_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError("event log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return events;
}

std::string outputs_to_jsonl(const std::vector<PoseOutput>& outputs) {
  std::ostringstream out;
  for (const auto& o : outputs) {
    json j;
    j["t_ms"] = o.t_ms;
    j["x"] = o.position.x;
    j["y"] = o.position.y;
    j["floor"] = o.floor;
    j["case"] = o.case_id;
    j["diverged"] = o.diverged;
    j["reset"] = o.ble_reset;
    if (o.ble_mode) j["mode"] = *o.ble_mode == GmlMode::Sparse ? "sparse" : "dense";
    out << j.dump() << '\n';
  }
  return out.str();
}

std::vector<PoseOutput> outputs_from_jsonl(const std::string& text) {
  std::vector<PoseOutput> outputs;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    PoseOutput o;
    o.t_ms = j.at("t_ms").get<int64_t>();
    o.position = {j.at("x").get<double>(), j.at("y").get<double>()};
    o.floor = j.value("floor", 0);
    o.case_id = j.value("case", 0);
    o.diverged = j.value("diverged", false);
    o.ble_reset = j.value("reset", false);
    if (j.contains("mode"))
      o.ble_mode = j["mode"] == "sparse" ? GmlMode::Sparse : GmlMode::Dense;
    outputs.push_back(o);
  }
  return outputs;
}

std::string truth_to_jsonl(const std::vector<TruthStep>& steps) {
  std::ostringstream out;
  for (const auto& s : steps) {
    json j;
    j["t_ms"] = s.t_ms;
    j["x"] = s.position.x;
    j["y"] = s.position.y;
    j["floor"] = s.floor;
    j["heading"] = s.heading;
    j["stride_m"] = s.stride_m;
    out << j.dump() << '\n';
  }
  return out.str();
}

std::vector<TruthStep> truth_from_jsonl(const std::string& text) {
  std::vector<TruthStep> steps;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    TruthStep s;
    s.t_ms = j.at("t_ms").get<int64_t>();
    s.position = {j.at("x").get<double>(), j.at("y").get<double>()};
    s.floor = j.value("floor", 0);
    s.heading = j.value("heading", 0.0);
    s.stride_m = j.value("stride_m", 0.6);
    steps.push_back(s);
  }
  return steps;
}

std::string cdf_to_csv(const std::vector<std::pair<double, double>>& rows) {
  std::ostringstream out;
  out << "error_m,cumulative_fraction\n";
  for (const auto& [e, f] : rows) out << e << ',' << f << '\n';
  return out.str();
}

namespace {

void check_known_keys(const json& j, const std::vector<std::string>& known,
                      const std::string& where) {
  for (const auto& [key, val] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown config key '" + key + "' in " + where);
  }
}

}  // namespace

EngineConfig engine_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad config: ") + e.what());
  }
  const std::string schema = j.value("schema", "");
  if (schema.rfind("fpbp-config/1", 0) != 0)
    throw FormatError("unsupported config schema: " + schema);
  check_known_keys(j, {"schema", "ble", "pathloss", "pdr", "fusion", "ppc", "engine"}, "root");

  EngineConfig c;
  if (j.contains("ble")) {
    const auto& b = j["ble"];
    check_known_keys(b,
                     {"estimation_interval_ms", "kalman_q", "kalman_r", "n_select", "kappa",
                      "tau", "d0_manhattan_m", "smoothing_n", "mode"},
                     "ble");
    c.estimation_interval_ms = b.value("estimation_interval_ms", c.estimation_interval_ms);
    c.kalman_q = b.value("kalman_q", c.kalman_q);
    c.kalman_r = b.value("kalman_r", c.kalman_r);
    c.gml.n_select = b.value("n_select", c.gml.n_select);
    c.gml.kappa = b.value("kappa", c.gml.kappa);
    c.gml.tau = b.value("tau", c.gml.tau);
    c.gml.d0_m = b.value("d0_manhattan_m", c.gml.d0_m);
    c.gml.smoothing_n = b.value("smoothing_n", c.gml.smoothing_n);
    c.gml.mode = b.value("mode", "dense") == "sparse" ? GmlMode::Sparse : GmlMode::Dense;
  }
  if (j.contains("pathloss")) {
    const auto& p = j["pathloss"];
    check_known_keys(p, {"n", "r0_dbm", "sigma_db"}, "pathloss");
    c.pathloss.n = p.value("n", c.pathloss.n);
    c.pathloss.r0_dbm = p.value("r0_dbm", c.pathloss.r0_dbm);
    c.pathloss.sigma_db = p.value("sigma_db", c.pathloss.sigma_db);
  }
  if (j.contains("pdr")) {
    const auto& p = j["pdr"];
    check_known_keys(p,
                     {"window_half_size", "z_threshold", "k_threshold", "beta", "warmup_s",
                      "madgwick_gain", "imu_rate_hz"},
                     "pdr");
    c.step_detector.half_window = p.value("window_half_size", c.step_detector.half_window);
    c.step_detector.z_threshold = p.value("z_threshold", c.step_detector.z_threshold);
    c.step_detector.k_threshold = p.value("k_threshold", c.step_detector.k_threshold);
    c.step_beta = p.value("beta", c.step_beta);
    c.imu_rate_hz = p.value("imu_rate_hz", c.imu_rate_hz);
    c.orientation.warmup_samples =
        static_cast<int>(p.value("warmup_s", 2.0) * c.imu_rate_hz);
    c.orientation.madgwick_gain = p.value("madgwick_gain", c.orientation.madgwick_gain);
  }
  if (j.contains("fusion")) {
    const auto& f = j["fusion"];
    check_known_keys(f,
                     {"particles", "step_noise_m", "heading_noise_rad", "sigma_x2",
                      "stale_fix_ms", "ess_gate_fraction"},
                     "fusion");
    c.fusion.particle_count = f.value("particles", c.fusion.particle_count);
    c.fusion.step_noise_m = f.value("step_noise_m", c.fusion.step_noise_m);
    c.fusion.heading_noise_rad = f.value("heading_noise_rad", c.fusion.heading_noise_rad);
    c.fusion.sigma_x_sq = f.value("sigma_x2", c.fusion.sigma_x_sq);
    c.fusion.ess_gate_fraction = f.value("ess_gate_fraction", c.fusion.ess_gate_fraction);
    c.stale_fix_ms = f.value("stale_fix_ms", c.stale_fix_ms);
  }
  if (j.contains("ppc")) {
    const auto& p = j["ppc"];
    check_known_keys(p,
                     {"delta_phi_deg", "n_angles", "alpha0_deg", "scale_f", "epsilon",
                      "case2_streak_limit", "global_contour_search"},
                     "ppc");
    c.ppc.delta_phi_rad = p.value("delta_phi_deg", 5.0) * M_PI / 180.0;
    c.ppc.n_angles = p.value("n_angles", c.ppc.n_angles);
    c.ppc.alpha0_rad = p.value("alpha0_deg", 45.0) * M_PI / 180.0;
    c.ppc.scale_f = p.value("scale_f", c.ppc.scale_f);
    c.ppc.epsilon = p.value("epsilon", c.ppc.epsilon);
    c.ppc.case2_streak_limit = p.value("case2_streak_limit", c.ppc.case2_streak_limit);
    c.ppc.global_contour_search = p.value("global_contour_search", c.ppc.global_contour_search);
  }
  if (j.contains("engine")) {
    const auto& e = j["engine"];
    check_known_keys(e,
                     {"init_duration_ms", "fta_dwell_required", "cross_floor_margin_db",
                      "min_cross_floor_beacons"},
                     "engine");
    c.init_duration_ms = e.value("init_duration_ms", c.init_duration_ms);
    c.floor_policy.fta_dwell_required =
        e.value("fta_dwell_required", c.floor_policy.fta_dwell_required);
    c.floor_policy.cross_floor_margin_db =
        e.value("cross_floor_margin_db", c.floor_policy.cross_floor_margin_db);
    c.floor_policy.min_cross_floor_beacons =
        e.value("min_cross_floor_beacons", c.floor_policy.min_cross_floor_beacons);
  }

  // Documented parameter ranges.
  if (c.gml.n_select < 3) throw ConfigError("ble.n_select must be >= 3");
  if (c.gml.kappa < 0.0) throw ConfigError("ble.kappa must be >= 0");
  if (c.gml.tau <= 0.0) throw ConfigError("ble.tau must be positive");
  if (c.gml.d0_m <= 0.0) throw ConfigError("ble.d0_manhattan_m must be positive");
  if (c.gml.smoothing_n < 1) throw ConfigError("ble.smoothing_n must be >= 1");
  if (c.fusion.particle_count < 1) throw ConfigError("fusion.particles must be >= 1");
  if (c.fusion.sigma_x_sq <= 0.0) throw ConfigError("fusion.sigma_x2 must be positive");
  if (c.ppc.scale_f < 1.0) throw ConfigError("ppc.scale_f must be >= 1");
  if (c.ppc.n_angles < 1) throw ConfigError("ppc.n_angles must be >= 1");
  if (c.ppc.delta_phi_rad * c.ppc.n_angles > M_PI / 2.0 + c.ppc.delta_phi_rad)
    throw ConfigError("ppc candidate angles exceed a quarter turn");
  if (c.ppc.epsilon <= 0.0) throw ConfigError("ppc.epsilon must be positive");
  if (c.ppc.case2_streak_limit < 1) throw ConfigError("ppc.case2_streak_limit must be >= 1");
  if (c.floor_policy.fta_dwell_required < 1 || c.floor_policy.min_cross_floor_beacons < 1)
    throw ConfigError("floor transition counts must be >= 1");
  return c;
}

std::string engine_config_to_json(const EngineConfig& c) {
  json j;
  j["schema"] = "fpbp-config/1";
  j["ble"] = {{"estimation_interval_ms", c.estimation_interval_ms},
              {"kalman_q", c.kalman_q},
              {"kalman_r", c.kalman_r},
              {"n_select", c.gml.n_select},
              {"kappa", c.gml.kappa},
              {"tau", c.gml.tau},
              {"d0_manhattan_m", c.gml.d0_m},
              {"smoothing_n", c.gml.smoothing_n},
              {"mode", c.gml.mode == GmlMode::Sparse ? "sparse" : "dense"}};
  j["pathloss"] = {{"n", c.pathloss.n}, {"r0_dbm", c.pathloss.r0_dbm}, {"sigma_db", c.pathloss.sigma_db}};
  j["pdr"] = {{"window_half_size", c.step_detector.half_window},
              {"z_threshold", c.step_detector.z_threshold},
              {"k_threshold", c.step_detector.k_threshold},
              {"beta", c.step_beta},
              {"imu_rate_hz", c.imu_rate_hz},
              {"warmup_s", c.orientation.warmup_samples / std::max(c.imu_rate_hz, 1.0)},
              {"madgwick_gain", c.orientation.madgwick_gain}};
  j["fusion"] = {{"particles", c.fusion.particle_count},
                 {"step_noise_m", c.fusion.step_noise_m},
                 {"heading_noise_rad", c.fusion.heading_noise_rad},
                 {"sigma_x2", c.fusion.sigma_x_sq},
                 {"stale_fix_ms", c.stale_fix_ms},
                 {"ess_gate_fraction", c.fusion.ess_gate_fraction}};
  j["ppc"] = {{"delta_phi_deg", c.ppc.delta_phi_rad * 180.0 / M_PI},
              {"n_angles", c.ppc.n_angles},
              {"alpha0_deg", c.ppc.alpha0_rad * 180.0 / M_PI},
              {"scale_f", c.ppc.scale_f},
              {"epsilon", c.ppc.epsilon},
              {"case2_streak_limit", c.ppc.case2_streak_limit},
              {"global_contour_search", c.ppc.global_contour_search}};
  j["engine"] = {{"init_duration_ms", c.init_duration_ms},
                 {"fta_dwell_required", c.floor_policy.fta_dwell_required},
                 {"cross_floor_margin_db", c.floor_policy.cross_floor_margin_db},
                 {"min_cross_floor_beacons", c.floor_policy.min_cross_floor_beacons}};
  return j.dump(2);
}

}  // namespace fpbp
