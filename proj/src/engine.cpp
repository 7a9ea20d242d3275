#include "fpbp/engine.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "fpbp/errors.hpp"

namespace fpbp {

PdrPipeline::PdrPipeline(const StepDetectorConfig& detector, const OrientationConfig& orientation,
                         double beta, double rate_hz)
    : detector_(detector), orientation_(orientation), beta_(beta), rate_hz_(rate_hz) {}

std::optional<StepEvent> PdrPipeline::on_imu(const ImuSample& sample) {
  double dt = 1.0 / rate_hz_;
  if (last_t_ms_ && sample.t_ms > *last_t_ms_) dt = (sample.t_ms - *last_t_ms_) / 1000.0;
  last_t_ms_ = sample.t_ms;
  orientation_.update(sample, dt);
  if (!sample.accel_linear) return std::nullopt;

  const Mat3 r_d = orientation_.device_to_map();
  const auto detection = detector_.push(vertical_accel(*sample.accel_linear, r_d));
  if (!detection) return std::nullopt;

  StepEvent step;
  // The peak sits half a window back from the confirming sample.
  const int64_t lag_ms =
      static_cast<int64_t>(std::lround((detector_.sample_count() - 1 - detection->sample_index) *
                                       1000.0 / rate_hz_));
  step.t_ms = sample.t_ms - lag_ms;
  step.length_m = weinberg_step_length(detection->z_pp, beta_);
  step.yaw_rad = step_heading(r_d);
  return step;
}

BleTracker::BleTracker(const FloorPlanMap* map, const BeaconRegistry* registry,
                       const EngineConfig& config, Estimator estimator)
    : map_(map), registry_(registry), config_(config), estimator_(estimator) {
  filters_.assign(registry->size(), RssiKalman(config.kalman_q, config.kalman_r));
  last_heard_ms_.assign(registry->size(), std::numeric_limits<int64_t>::min());
}

std::optional<BleFix> BleTracker::on_rssi(int64_t t_ms, const std::string& uuid,
                                          double rssi_dbm) {
  auto fix = advance_to(t_ms);
  const auto idx = registry_->index_of(uuid);
  if (!idx) return fix;  // unknown beacons are ignored
  filters_[*idx].update(rssi_dbm);
  last_heard_ms_[*idx] = t_ms;
  if (!window_end_) window_end_ = t_ms + config_.estimation_interval_ms;
  return fix;
}

std::optional<BleFix> BleTracker::advance_to(int64_t t_ms) {
  std::optional<BleFix> latest;
  while (window_end_ && t_ms >= *window_end_) {
    auto fix = close_window(*window_end_);
    *window_end_ += config_.estimation_interval_ms;
    if (fix) latest = fix;
  }
  return latest;
}

std::optional<BleFix> BleTracker::close_window(int64_t window_end) {
  ++closed_windows_;
  const int64_t window_start = window_end - config_.estimation_interval_ms;
  last_window_readings_.clear();
  std::vector<RssiObservation> active_floor;
  for (size_t i = 0; i < registry_->size(); ++i) {
    if (last_heard_ms_[i] < window_start || !filters_[i].initialized()) continue;
    const RssiObservation obs{static_cast<int>(i), filters_[i].estimate()};
    last_window_readings_.push_back(obs);
    if (registry_->at(i).floor_id == map_->floor_id()) active_floor.push_back(obs);
  }

  std::optional<Vec2> prev;
  if (latest_fix_) prev = latest_fix_->position;
  try {
    BleFix fix;
    switch (estimator_) {
      case Estimator::Gml:
        fix = gml_estimate(*map_, *registry_, active_floor, prev, config_.gml, config_.pathloss,
                           history_, window_end);
        break;
      case Estimator::Gimle:
        fix.position = smooth_fix(
            gimle_estimate(*map_, *registry_, active_floor, config_.pathloss,
                           config_.gml.n_select),
            history_, config_.gml.smoothing_n);
        fix.t_ms = window_end;
        break;
      case Estimator::Trilateration:
        fix.position = smooth_fix(trilateration_lls(*registry_, active_floor, config_.pathloss),
                                  history_, config_.gml.smoothing_n);
        fix.t_ms = window_end;
        break;
      case Estimator::Frbw:
        fix.position = smooth_fix(frbw_estimate(*registry_, active_floor, config_.pathloss),
                                  history_, config_.gml.smoothing_n);
        fix.t_ms = window_end;
        break;
    }
    history_.push_front(fix.position);
    while (static_cast<int>(history_.size()) > std::max(config_.gml.smoothing_n - 1, 0))
      history_.pop_back();
    latest_fix_ = fix;
    ++fix_count_;
    return fix;
  } catch (const InsufficientBeaconsError&) {
    ++skipped_windows_;
    return std::nullopt;
  } catch (const SingularGeometryError&) {
    ++skipped_windows_;
    return std::nullopt;
  }
}

Session::Session(std::map<int, std::shared_ptr<const FloorPlanMap>> maps, BeaconRegistry registry,
                 EngineConfig config, uint64_t seed, int start_floor)
    : maps_(std::move(maps)),
      registry_(std::move(registry)),
      config_(config),
      seed_(seed),
      floor_(start_floor) {
  if (maps_.find(floor_) == maps_.end()) throw ConfigError("no map for start floor");
  ble_ = std::make_unique<BleTracker>(maps_.at(floor_).get(), &registry_, config_);
  pdr_ = std::make_unique<PdrPipeline>(config_.step_detector, config_.orientation,
                                       config_.step_beta, config_.imu_rate_hz);
}

std::optional<BleFix> Session::on_rssi(int64_t t_ms, const std::string& uuid, double rssi_dbm) {
  const auto fix = ble_->on_rssi(t_ms, uuid, rssi_dbm);
  if (fix) handle_fix(*fix);
  return fix;
}

void Session::handle_fix(const BleFix& fix) {
  if (phase_ == Phase::Initializing) {
    if (!init_start_ms_) init_start_ms_ = fix.t_ms;
    init_fixes_.push_back(fix.position);
    if (fix.t_ms - *init_start_ms_ >= config_.init_duration_ms) {
      Vec2 mean{0, 0};
      for (const auto& p : init_fixes_) mean += p;
      mean = mean / static_cast<double>(init_fixes_.size());
      particles_ = ParticleSet::init(mean, config_.fusion, seed_);
      last_position_ = mean;
      ppc_state_ = PpcState{};
      ppc_state_.current_room = active_map().room_of(mean);
      phase_ = Phase::Tracking;
    }
    return;
  }
  check_floor_transition();
}

void Session::check_floor_transition() {
  if (maps_.size() < 2 || !last_position_) return;
  const Vec2 pos = *last_position_;
  if (!active_map().contains(pos) || active_map().feature_at(pos) != MapFeature::Fta) {
    transition_candidate_ = -1;
    transition_dwell_ = 0;
    return;
  }
  // Strongest-beacon vote: beacons within the margin of the maximum RSSI,
  // counted per foreign floor.
  const auto& readings = ble_->last_window_readings();
  if (readings.empty()) return;
  double max_rssi = -std::numeric_limits<double>::infinity();
  for (const auto& o : readings) max_rssi = std::max(max_rssi, o.rssi_dbm);
  std::map<int, int> votes;
  for (const auto& o : readings) {
    if (o.rssi_dbm < max_rssi - config_.floor_policy.cross_floor_margin_db) continue;
    ++votes[registry_.at(o.beacon).floor_id];
  }
  int best_floor = floor_;
  int best_votes = 0;
  for (const auto& [f, v] : votes) {
    if (f == floor_ || maps_.find(f) == maps_.end()) continue;
    if (v > best_votes) {
      best_votes = v;
      best_floor = f;
    }
  }
  if (best_floor != floor_ && best_votes >= config_.floor_policy.min_cross_floor_beacons) {
    if (transition_candidate_ == best_floor) {
      ++transition_dwell_;
    } else {
      transition_candidate_ = best_floor;
      transition_dwell_ = 1;
    }
    if (transition_dwell_ >= config_.floor_policy.fta_dwell_required) switch_floor(best_floor);
  } else {
    transition_candidate_ = -1;
    transition_dwell_ = 0;
  }
}

void Session::switch_floor(int new_floor) {
  floor_ = new_floor;
  ++floor_switch_count_;
  // Full re-initialization: nothing derived from the previous floor's map
  // survives.
  ble_ = std::make_unique<BleTracker>(maps_.at(floor_).get(), &registry_, config_);
  particles_.reset();
  ppc_state_ = PpcState{};
  last_position_.reset();
  init_fixes_.clear();
  init_start_ms_.reset();
  transition_candidate_ = -1;
  transition_dwell_ = 0;
  phase_ = Phase::Initializing;
}

std::optional<PoseOutput> Session::on_step(const StepEvent& step) {
  if (const auto fix = ble_->advance_to(step.t_ms)) handle_fix(*fix);
  if (phase_ != Phase::Tracking || !particles_ || !last_position_) return std::nullopt;

  const Vec2 prev = *last_position_;
  particles_->propagate(step);

  bool diverged = false;
  std::optional<Vec2> fresh_fix;
  const auto& fix = ble_->latest_fix();
  if (fix && step.t_ms - fix->t_ms <= config_.stale_fix_ms) fresh_fix = fix->position;
  if (fresh_fix) {
    try {
      particles_->reweight(*fresh_fix);
    } catch (const AllZeroWeightsError&) {
      particles_->reinitialize(*fresh_fix);
      diverged = true;
    }
  }
  const double ess_gate = config_.fusion.ess_gate_fraction;
  if (ess_gate <= 0.0 ||
      particles_->effective_sample_size() < ess_gate * static_cast<double>(particles_->size()))
    particles_->resample();
  const Vec2 estimate = particles_->estimate();

  PoseOutput out;
  out.t_ms = step.t_ms;
  out.floor = floor_;
  out.diverged = diverged;
  if (diverged) {
    // The track restarts at the fix; the stale previous position must not
    // feed a correction.
    out.position = estimate;
    ppc_state_.case2_streak = 0;
    if (auto room = active_map().room_of(estimate)) ppc_state_.current_room = *room;
  } else if (config_.use_ppc) {
    const auto outcome =
        correct(active_map(), prev, estimate, fresh_fix, *particles_, config_.ppc, ppc_state_);
    out.position = outcome.position;
    out.case_id = outcome.case_id;
    out.ble_reset = outcome.ble_reset;
    out.hit = outcome.hit;
    out.phi_star_rad = outcome.phi_star_rad;
  } else {
    out.position = estimate;
  }
  last_position_ = out.position;
  return out;
}

std::optional<PoseOutput> Session::on_imu(const ImuSample& sample) {
  if (const auto fix = ble_->advance_to(sample.t_ms)) handle_fix(*fix);
  const auto step = pdr_->on_imu(sample);
  if (!step) return std::nullopt;
  return on_step(*step);
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "fpbp") return Algorithm::FpBp;
  if (name == "bp") return Algorithm::Bp;
  if (name == "pdr") return Algorithm::Pdr;
  if (name == "gml") return Algorithm::Gml;
  if (name == "gimle") return Algorithm::Gimle;
  if (name == "trilateration") return Algorithm::Trilateration;
  if (name == "frbw") return Algorithm::Frbw;
  throw ConfigError("unknown algorithm: " + name);
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::FpBp:
      return "fpbp";
    case Algorithm::Bp:
      return "bp";
    case Algorithm::Pdr:
      return "pdr";
    case Algorithm::Gml:
      return "gml";
    case Algorithm::Gimle:
      return "gimle";
    case Algorithm::Trilateration:
      return "trilateration";
    case Algorithm::Frbw:
      return "frbw";
  }
  return "?";
}

namespace {

void append_trace(std::vector<std::string>* trace, const PoseOutput& out,
                  const std::optional<int>& room) {
  if (trace == nullptr) return;
  nlohmann::json j;
  j["t_ms"] = out.t_ms;
  j["case"] = out.case_id;
  j["x"] = out.position.x;
  j["y"] = out.position.y;
  if (out.hit)
    j["hit"] = {out.hit->x, out.hit->y};
  else
    j["hit"] = nullptr;
  if (out.phi_star_rad)
    j["phi_star_deg"] = *out.phi_star_rad * 180.0 / M_PI;
  else
    j["phi_star_deg"] = nullptr;
  if (room)
    j["room_id"] = *room;
  else
    j["room_id"] = nullptr;
  trace->push_back(j.dump());
}

}  // namespace

std::vector<PoseOutput> run_replay(const std::map<int, std::shared_ptr<const FloorPlanMap>>& maps,
                                   const BeaconRegistry& registry,
                                   const std::vector<ReplayEvent>& events, Algorithm algorithm,
                                   const EngineConfig& config, uint64_t seed,
                                   std::vector<std::string>* trace) {
  std::vector<PoseOutput> outputs;
  std::optional<Vec2> init_pos;
  int init_floor = maps.begin()->first;
  for (const auto& ev : events) {
    if (ev.kind == ReplayEvent::Kind::Init) {
      init_pos = ev.position;
      init_floor = ev.floor;
      break;
    }
  }

  if (algorithm == Algorithm::FpBp || algorithm == Algorithm::Bp) {
    EngineConfig cfg = config;
    cfg.use_ppc = (algorithm == Algorithm::FpBp);
    Session session(maps, registry, cfg, seed, init_floor);
    for (const auto& ev : events) {
      switch (ev.kind) {
        case ReplayEvent::Kind::Init:
          break;
        case ReplayEvent::Kind::Rssi:
          session.on_rssi(ev.t_ms, ev.uuid, ev.rssi_dbm);
          break;
        case ReplayEvent::Kind::Step: {
          const auto out = session.on_step({ev.t_ms, ev.step_len, ev.yaw});
          if (out) {
            outputs.push_back(*out);
            append_trace(trace, *out, session.ppc_state().current_room);
          }
          break;
        }
        case ReplayEvent::Kind::Imu: {
          const auto out = session.on_imu(ev.imu);
          if (out) {
            outputs.push_back(*out);
            append_trace(trace, *out, session.ppc_state().current_room);
          }
          break;
        }
      }
    }
    return outputs;
  }

  if (algorithm == Algorithm::Pdr) {
    if (!init_pos) throw ConfigError("pdr replay requires an init record in the event log");
    Vec2 pos = *init_pos;
    PdrPipeline pipeline(config.step_detector, config.orientation, config.step_beta,
                         config.imu_rate_hz);
    for (const auto& ev : events) {
      std::optional<StepEvent> step;
      if (ev.kind == ReplayEvent::Kind::Step) step = StepEvent{ev.t_ms, ev.step_len, ev.yaw};
      if (ev.kind == ReplayEvent::Kind::Imu) step = pipeline.on_imu(ev.imu);
      if (!step) continue;
      pos += step->vector();
      outputs.push_back({step->t_ms, pos, init_floor, 0, false, false});
    }
    return outputs;
  }

  // BLE-only estimators, recorded at each step moment.
  BleTracker::Estimator estimator = BleTracker::Estimator::Gml;
  if (algorithm == Algorithm::Gimle) estimator = BleTracker::Estimator::Gimle;
  if (algorithm == Algorithm::Trilateration) estimator = BleTracker::Estimator::Trilateration;
  if (algorithm == Algorithm::Frbw) estimator = BleTracker::Estimator::Frbw;
  BleTracker tracker(maps.at(init_floor).get(), &registry, config, estimator);
  for (const auto& ev : events) {
    switch (ev.kind) {
      case ReplayEvent::Kind::Init:
        break;
      case ReplayEvent::Kind::Rssi:
        tracker.on_rssi(ev.t_ms, ev.uuid, ev.rssi_dbm);
        break;
      case ReplayEvent::Kind::Step:
      case ReplayEvent::Kind::Imu: {
        tracker.advance_to(ev.t_ms);
        if (ev.kind == ReplayEvent::Kind::Imu) break;  // only step moments emit
        if (tracker.latest_fix()) {
          PoseOutput out{ev.t_ms, tracker.latest_fix()->position, init_floor, 0, false, false, {}};
          out.ble_mode = tracker.latest_fix()->mode_used;
          outputs.push_back(out);
        }
        break;
      }
    }
  }
  return outputs;
}

}  // namespace fpbp
