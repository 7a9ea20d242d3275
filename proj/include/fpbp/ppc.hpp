#pragma once

#include <optional>
#include <vector>

#include "fpbp/floorplan.hpp"
#include "fpbp/fusion.hpp"
#include "fpbp/geometry.hpp"

namespace fpbp {

struct RaycastResult {
  bool hit = false;
  Vec2 point;                                  // first obstacle contact (valid iff hit)
  MapFeature feature = MapFeature::Walkable;   // feature of the hit pixel
  double t = 0.0;                              // contact parameter along [a, b]
};

// First obstacle contact along the segment a -> b; a pixel blocks when
// M > threshold. The traversal walks every pixel the segment passes through
// (exact supercover), so obstacles thinner than a step cannot be skipped;
// the contact point lies on the entered pixel's boundary. a == b degenerates
// to a point query. Out-of-raster pixels count as Wall.
RaycastResult raycast(const FloorPlanMap& map, const Vec2& a, const Vec2& b,
                      double threshold = kObstacleAny);

// Angle in [0, pi] between the boundary normal and the reversed step.
double incident_angle(const Vec2& normal, const Vec2& step);

struct PpcConfig {
  double delta_phi_rad = 5.0 * M_PI / 180.0;  // unit rotation angle
  int n_angles = 12;                          // candidates +-i*delta_phi, i = 1..n
  double alpha0_rad = 45.0 * M_PI / 180.0;    // door-passage incident threshold
  double scale_f = 1.5;                       // probe scale factor (>= 1)
  double epsilon = 0.1;                       // backoff fraction of the step
  int case2_streak_limit = 3;
  bool global_contour_search = false;         // Case 3: search all contours
};

// Candidate rotation angles ordered by ascending magnitude, positive before
// negative at equal magnitude.
std::vector<double> candidate_angles(const PpcConfig& config);

struct CorrectionPlan {
  bool needs_yaw = true;
  bool door_passage = false;          // Door hit at alpha <= alpha0
  std::vector<double> angles;         // filtered candidate sequence
};

// Decides between yaw correction and door passage for a raycast hit. Door
// hits above alpha0 keep only the rotation sign that increases the incident
// angle (turning into the room); an unavailable normal falls back to the
// full wall-style sequence.
CorrectionPlan plan_correction(const FloorPlanMap& map, const Vec2& prev, const Vec2& step_hat,
                               const RaycastResult& hit, const PpcConfig& config);

// Smallest-|phi| candidate whose scaled probe point is reachable from prev,
// probing with raycast at the movement threshold; nullopt when every
// candidate is blocked.
std::optional<double> find_optimal_rotation(const FloorPlanMap& map, const Vec2& prev,
                                            const Vec2& step_hat,
                                            const std::vector<double>& angles, double scale_f);

struct PpcState {
  int case2_streak = 0;
  std::optional<int> current_room;
};

struct CorrectionOutcome {
  Vec2 position;
  int case_id = 0;  // 0 = no correction, 1..3 = paper cases
  bool ble_reset = false;
  std::optional<Vec2> hit;
  std::optional<double> phi_star_rad;
};

// Full post-position correction for one step: feasibility raycast, case
// selection, output correction, rigid particle translation, and the
// consecutive-blocked-step reset to the BLE fix. `ble_fix` may be absent
// (pure-PDR stretch); door passage then degrades to the blocked branch.
CorrectionOutcome correct(const FloorPlanMap& map, const Vec2& prev, const Vec2& estimate,
                          const std::optional<Vec2>& ble_fix, ParticleSet& particles,
                          const PpcConfig& config, PpcState& state);

}  // namespace fpbp
