#include "fpbp/ppc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fpbp/errors.hpp"

namespace fpbp {

RaycastResult raycast(const FloorPlanMap& map, const Vec2& a, const Vec2& b, double threshold) {
  auto blocked = [&](int px, int py) {
    return feature_value(map.feature_px_clamped(px, py)) > threshold;
  };
  auto make_hit = [&](double t, int px, int py) {
    RaycastResult r;
    r.hit = true;
    r.t = t;
    r.point = a + (b - a) * t;
    r.feature = map.feature_px_clamped(px, py);
    return r;
  };

  const Vec2 a_ics = map.mcs_to_ics(a);
  const Vec2 b_ics = map.mcs_to_ics(b);
  int ix = static_cast<int>(std::floor(a_ics.x));
  int iy = static_cast<int>(std::floor(a_ics.y));

  if (a == b) {
    if (blocked(ix, iy)) return make_hit(0.0, ix, iy);
    return {};
  }

  const double dx = b_ics.x - a_ics.x;
  const double dy = b_ics.y - a_ics.y;
  const int end_ix = static_cast<int>(std::floor(b_ics.x));
  const int end_iy = static_cast<int>(std::floor(b_ics.y));
  const int step_x = dx > 0.0 ? 1 : (dx < 0.0 ? -1 : 0);
  const int step_y = dy > 0.0 ? 1 : (dy < 0.0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  double t_max_x = inf;
  double t_max_y = inf;
  double t_delta_x = inf;
  double t_delta_y = inf;
  if (step_x > 0) {
    t_max_x = ((ix + 1) - a_ics.x) / dx;
    t_delta_x = 1.0 / dx;
  } else if (step_x < 0) {
    t_max_x = (ix - a_ics.x) / dx;
    t_delta_x = -1.0 / dx;
  }
  if (step_y > 0) {
    t_max_y = ((iy + 1) - a_ics.y) / dy;
    t_delta_y = 1.0 / dy;
  } else if (step_y < 0) {
    t_max_y = (iy - a_ics.y) / dy;
    t_delta_y = -1.0 / dy;
  }

  if (blocked(ix, iy)) return make_hit(0.0, ix, iy);
  const long max_steps =
      static_cast<long>(std::abs(end_ix - ix)) + std::abs(end_iy - iy) + 4;
  for (long n = 0; n < max_steps; ++n) {
    if (ix == end_ix && iy == end_iy) break;
    double t;
    if (t_max_x < t_max_y) {
      t = t_max_x;
      ix += step_x;
      t_max_x += t_delta_x;
    } else if (t_max_y < t_max_x) {
      t = t_max_y;
      iy += step_y;
      t_max_y += t_delta_y;
    } else {
      // Exact corner crossing: the quantized trajectory steps diagonally.
      t = t_max_x;
      ix += step_x;
      iy += step_y;
      t_max_x += t_delta_x;
      t_max_y += t_delta_y;
    }
    if (t > 1.0) break;
    if (blocked(ix, iy)) return make_hit(std::min(t, 1.0), ix, iy);
  }
  return {};
}

double incident_angle(const Vec2& normal, const Vec2& step) {
  const double denom = normal.norm() * step.norm();
  if (denom <= 0.0) throw ConfigError("incident_angle requires nonzero vectors");
  const double c = std::clamp(normal.dot(step * -1.0) / denom, -1.0, 1.0);
  return std::acos(c);
}

std::vector<double> candidate_angles(const PpcConfig& config) {
  std::vector<double> angles;
  angles.reserve(2 * config.n_angles);
  for (int i = 1; i <= config.n_angles; ++i) {
    angles.push_back(i * config.delta_phi_rad);
    angles.push_back(-i * config.delta_phi_rad);
  }
  return angles;
}

CorrectionPlan plan_correction(const FloorPlanMap& map, const Vec2& prev, const Vec2& step_hat,
                               const RaycastResult& hit, const PpcConfig& config) {
  (void)prev;
  CorrectionPlan plan;
  plan.angles = candidate_angles(config);
  if (hit.feature != MapFeature::Door) return plan;  // wall-style: full sequence

  Vec2 normal;
  try {
    normal = map.surface_normal_at(hit.point);
  } catch (const ZeroGradientError&) {
    return plan;  // normal unavailable: treat like a wall
  }
  const double alpha = incident_angle(normal, step_hat);
  if (alpha <= config.alpha0_rad) {
    plan.needs_yaw = false;
    plan.door_passage = true;
    plan.angles.clear();
    return plan;
  }
  // Keep the sign that rotates the step toward the room interior, i.e. the
  // direction of increasing incident angle.
  const double alpha_pos = incident_angle(normal, rotate(step_hat, config.delta_phi_rad));
  const double alpha_neg = incident_angle(normal, rotate(step_hat, -config.delta_phi_rad));
  const bool keep_positive = alpha_pos > alpha_neg;
  std::vector<double> filtered;
  filtered.reserve(config.n_angles);
  for (double phi : plan.angles) {
    if ((phi > 0.0) == keep_positive) filtered.push_back(phi);
  }
  plan.angles = std::move(filtered);
  return plan;
}

std::optional<double> find_optimal_rotation(const FloorPlanMap& map, const Vec2& prev,
                                            const Vec2& step_hat,
                                            const std::vector<double>& angles, double scale_f) {
  for (double phi : angles) {
    const Vec2 probe = prev + rotate(step_hat * scale_f, phi);
    if (!raycast(map, prev, probe, kPassFta).hit) return phi;
  }
  return std::nullopt;
}

namespace {

// Shifts p forward along dir (unit-ish) in half-pixel increments until the
// movement threshold clears; gives up after max_dist.
std::optional<Vec2> nudge_free(const FloorPlanMap& map, Vec2 p, const Vec2& dir,
                               double max_dist) {
  const double step = 0.5 / map.resolution();
  const Vec2 unit = dir.normalized();
  double moved = 0.0;
  while (map.value_at(p) > kPassFta) {
    p += unit * step;
    moved += step;
    if (moved > max_dist) return std::nullopt;
  }
  return p;
}

}  // namespace

CorrectionOutcome correct(const FloorPlanMap& map, const Vec2& prev, const Vec2& estimate,
                          const std::optional<Vec2>& ble_fix, ParticleSet& particles,
                          const PpcConfig& config, PpcState& state) {
  CorrectionOutcome out;
  out.position = estimate;

  const Vec2 step_hat = estimate - prev;
  const RaycastResult hit = raycast(map, prev, estimate, kPassFta);
  if (!hit.hit || hit.point == prev) {
    state.case2_streak = 0;
    if (auto room = map.room_of(out.position)) state.current_room = *room;
    return out;
  }
  out.hit = hit.point;

  // Case 2 correction: back off from the hit point along the step; the
  // backoff stays on the already-validated prefix of the segment.
  auto blocked_position = [&]() {
    const double back_t = hit.t - config.epsilon;
    return back_t > 0.0 ? prev + step_hat * back_t : prev;
  };

  const CorrectionPlan plan = plan_correction(map, prev, step_hat, hit, config);
  bool case2 = false;
  if (plan.needs_yaw) {
    const auto phi_star = find_optimal_rotation(map, prev, step_hat, plan.angles, config.scale_f);
    bool applied = false;
    if (phi_star) {
      const Vec2 corrected = prev + rotate(step_hat, *phi_star);
      // The probe used the scaled step; verify the unscaled endpoint too.
      if (!raycast(map, prev, corrected, kPassFta).hit) {
        out.position = corrected;
        out.case_id = 1;
        out.phi_star_rad = *phi_star;
        applied = true;
      }
    }
    if (!applied) case2 = true;
  } else {
    // Door reached head-on: pass through only when the BLE fix says the
    // room changed, and the fix's room actually borders the door being
    // crossed (a lagging fix in some far room must not open this one).
    std::optional<int> fix_room;
    if (ble_fix) fix_room = map.room_of(*ble_fix);
    const auto door_rooms = map.rooms_adjacent_to_door(hit.point);
    const bool room_changed = fix_room && state.current_room && *fix_room != *state.current_room;
    const bool fix_borders_door =
        door_rooms.empty() ||
        (fix_room &&
         std::find(door_rooms.begin(), door_rooms.end(), *fix_room) != door_rooms.end());
    if (room_changed && fix_borders_door) {
      // Contour point completing the passage: nearest point on the
      // door/target-room interface, so the landing stays inside the opening
      // rather than sliding along the wall face past the jamb. The global
      // all-contours search is available for the unrestricted behavior.
      std::optional<Vec2> x_c;
      Vec2 inward = step_hat.normalized();
      if (!config.global_contour_search) {
        const auto interface = map.door_room_interface(hit.point, *fix_room);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& edge : interface) {
          Vec2 q;
          const double d = point_segment_distance(estimate, edge.a, edge.b, &q);
          if (d < best) {
            best = d;
            x_c = q;
            inward = edge.inward;
          }
        }
      }
      if (!x_c) x_c = map.closest_contour_point(estimate);
      // Step forward from x_c; when the oblique displacement would clip the
      // jamb, fall back to the interface's inward direction.
      std::optional<Vec2> accepted;
      const Vec2 candidates[2] = {step_hat, inward * step_hat.norm()};
      for (const Vec2& dir : candidates) {
        const Vec2 landing = *x_c + dir * config.epsilon;
        const auto free_landing = nudge_free(map, landing, dir, 2.0 * std::max(dir.norm(), 0.1));
        if (!free_landing) continue;
        if (raycast(map, prev, *free_landing, kWallOnly).hit) continue;
        accepted = free_landing;
        break;
      }
      if (accepted) {
        out.position = *accepted;
        out.case_id = 3;
        state.current_room = *fix_room;
      } else {
        case2 = true;
      }
    } else {
      case2 = true;
    }
  }

  if (case2) {
    out.position = blocked_position();
    out.case_id = 2;
    state.case2_streak += 1;
  } else {
    state.case2_streak = 0;
  }

  // Repeatedly blocked steps mean the track has deviated; snap back to the
  // BLE fix.
  if (state.case2_streak >= config.case2_streak_limit && ble_fix) {
    out.position = *ble_fix;
    out.ble_reset = true;
    state.case2_streak = 0;
    // A smoothed fix can sit on a door pixel; keep the previous room until
    // the position resolves to a real one.
    if (auto room = map.room_of(*ble_fix)) state.current_room = *room;
  }

  particles.translate(out.position - estimate);
  return out;
}

}  // namespace fpbp
