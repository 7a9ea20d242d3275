#include "fpbp/ppc.hpp"

#include <doctest.h>

#include <algorithm>

#include "fpbp/errors.hpp"
#include "fpbp/rng.hpp"
#include "raycast_oracle.hpp"
#include "test_maps.hpp"

using namespace fpbp;
using namespace fpbp::testmaps;
using fpbp::testoracle::raycast_oracle;

namespace {

FloorPlanMap wall_box_map() {
  Palette p;
  ImageRgb img = blank_raster(100, 100, p);
  add_border(img, 2, p.wall);
  fill_rect(img, 50, 20, 51, 80, p.wall);  // 1-px vertical wall
  return compile_map({img, p}, 10.0, 0.3, 0);
}

}  // namespace

TEST_CASE("raycast point query on an obstacle") {
  const auto map = wall_box_map();
  const Vec2 on_wall = map.ics_to_mcs({50.5, 50.5});
  const auto hit = raycast(map, on_wall, on_wall);
  CHECK(hit.hit);
  CHECK(hit.point == on_wall);
  CHECK(hit.feature == MapFeature::Wall);

  const Vec2 open = map.ics_to_mcs({20.5, 50.5});
  CHECK(!raycast(map, open, open).hit);
}

TEST_CASE("raycast: clear segment and one-pixel wall") {
  const auto map = wall_box_map();
  const Vec2 a = map.ics_to_mcs({10.5, 50.5});
  const Vec2 b = map.ics_to_mcs({40.5, 52.5});
  CHECK(!raycast(map, a, b).hit);

  const Vec2 c = map.ics_to_mcs({70.5, 49.5});
  const auto hit = raycast(map, a, c);
  REQUIRE(hit.hit);
  CHECK(hit.feature == MapFeature::Wall);
  // Contact on the wall's near face: x = 50 px = 5.0 m.
  CHECK(hit.point.x == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("raycast matches the crossing-enumeration oracle on random maps") {
  CounterRng rng(101, 60);
  int hits = 0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const auto raster = random_raster(900 + seed, 100, 100, 5, true, true);
    const auto map = compile_map(raster, 10.0, 0.3, 0);
    for (int i = 0; i < 400; ++i) {
      const Vec2 a{rng.next_uniform(0.05, 9.95), rng.next_uniform(0.05, 9.95)};
      const Vec2 b{rng.next_uniform(0.05, 9.95), rng.next_uniform(0.05, 9.95)};
      for (double thr : {kObstacleAny, kPassFta, kWallOnly}) {
        const auto got = raycast(map, a, b, thr);
        const auto want = raycast_oracle(map, a, b, thr);
        REQUIRE(got.hit == want.hit);
        if (got.hit) {
          ++hits;
          CHECK(got.feature == want.feature);
          CHECK(std::abs(got.t - want.t) * (b - a).norm() < 0.05);
        }
      }
    }
  }
  CHECK(hits > 1000);
}

TEST_CASE("incident angle basics and dot-product oracle") {
  CHECK(incident_angle({1, 0}, {-1, 0}) == doctest::Approx(0.0));
  CHECK(incident_angle({1, 0}, {0, 1}) == doctest::Approx(M_PI / 2.0));
  CounterRng rng(5, 61);
  for (int i = 0; i < 300; ++i) {
    const Vec2 n = Vec2{rng.next_gaussian(), rng.next_gaussian()}.normalized();
    const Vec2 s{rng.next_gaussian(), rng.next_gaussian()};
    if (n.norm() == 0.0 || s.norm() == 0.0) continue;
    const double expect = std::acos(std::clamp(n.dot(s * -1.0) / s.norm(), -1.0, 1.0));
    CHECK(incident_angle(n, s) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("candidate angles are ordered by magnitude, positive first") {
  PpcConfig config;
  const auto angles = candidate_angles(config);
  REQUIRE(angles.size() == 24);
  for (size_t i = 0; i < angles.size(); i += 2) {
    CHECK(angles[i] > 0.0);
    CHECK(angles[i + 1] == doctest::Approx(-angles[i]));
    if (i + 2 < angles.size()) CHECK(std::abs(angles[i + 2]) > std::abs(angles[i]));
  }
  CHECK(angles[0] == doctest::Approx(5.0 * M_PI / 180.0));
}

TEST_CASE("plan_correction: wall hits need yaw with the full sequence") {
  const auto map = wall_box_map();
  const Vec2 prev = map.ics_to_mcs({45.5, 50.5});
  const Vec2 target = map.ics_to_mcs({55.5, 50.5});
  const auto hit = raycast(map, prev, target, kPassFta);
  REQUIRE(hit.hit);
  const auto plan = plan_correction(map, prev, target - prev, hit, PpcConfig{});
  CHECK(plan.needs_yaw);
  CHECK(!plan.door_passage);
  CHECK(plan.angles.size() == 24);
}

TEST_CASE("plan_correction: door handling by incident angle") {
  // Vertical wall with a door; approach head-on and at a grazing angle.
  Palette p;
  ImageRgb img = blank_raster(100, 100, p);
  add_border(img, 2, p.wall);
  fill_rect(img, 50, 2, 54, 98, p.wall);
  fill_rect(img, 50, 40, 54, 60, p.door);
  const auto map = compile_map({img, p}, 10.0, 0.3, 0);

  // Head-on (east into a west-facing door): passage candidate.
  const Vec2 prev{4.0, 5.0};
  const Vec2 step_east{1.5, 0.0};
  const auto hit = raycast(map, prev, prev + step_east, kPassFta);
  REQUIRE(hit.hit);
  REQUIRE(hit.feature == MapFeature::Door);
  const auto plan = plan_correction(map, prev, step_east, hit, PpcConfig{});
  CHECK(!plan.needs_yaw);
  CHECK(plan.door_passage);

  // Grazing approach from the southwest: yaw correction with a single sign,
  // rotating toward increasing incident angle.
  const Vec2 prev2{4.55, 4.2};
  const Vec2 step2{0.6, 1.0};  // mostly northward, clipping the door
  const auto hit2 = raycast(map, prev2, prev2 + step2, kPassFta);
  REQUIRE(hit2.hit);
  REQUIRE(hit2.feature == MapFeature::Door);
  PpcConfig config;
  const auto plan2 = plan_correction(map, prev2, step2, hit2, config);
  CHECK(plan2.needs_yaw);
  REQUIRE(!plan2.angles.empty());
  // Geometric construction: the normal is (-1, 0); rotating the step
  // counterclockwise (positive) increases the incident angle here.
  const Vec2 n = map.surface_normal_at(hit2.point);
  const double a_pos = incident_angle(n, rotate(step2, config.delta_phi_rad));
  const double a_neg = incident_angle(n, rotate(step2, -config.delta_phi_rad));
  const bool expect_positive = a_pos > a_neg;
  for (double phi : plan2.angles) CHECK((phi > 0.0) == expect_positive);
  CHECK(plan2.angles.size() == 12);
}

TEST_CASE("find_optimal_rotation returns the smallest feasible |phi|") {
  const auto map = wall_box_map();
  PpcConfig config;
  const auto angles = candidate_angles(config);

  // Open space: first candidate wins immediately.
  const Vec2 open = map.ics_to_mcs({20.5, 50.5});
  const auto phi_open = find_optimal_rotation(map, open, {0.5, 0.0}, angles, config.scale_f);
  REQUIRE(phi_open.has_value());
  CHECK(*phi_open == angles.front());

  // Wall segment ahead (x = 5.0..5.1 m, y = 4.5..8.0 m): the chosen angle is
  // the first in Phi order whose scaled probe clears, verified by exhaustive
  // re-check.
  Palette pal;
  ImageRgb img1 = blank_raster(100, 100, pal);
  add_border(img1, 2, pal.wall);
  fill_rect(img1, 50, 20, 51, 55, pal.wall);
  const auto seg_map = compile_map({img1, pal}, 10.0, 0.3, 0);
  const Vec2 prev{4.45, 4.95};
  const Vec2 step{0.8, 0.0};
  const auto phi = find_optimal_rotation(seg_map, prev, step, angles, config.scale_f);
  REQUIRE(phi.has_value());
  CHECK(*phi < 0.0);  // clears below the wall segment
  for (double candidate : angles) {
    if (std::abs(candidate) >= std::abs(*phi)) break;
    const Vec2 probe = prev + rotate(step * config.scale_f, candidate);
    CHECK(raycast(seg_map, prev, probe, kPassFta).hit);
  }
  const Vec2 chosen_probe = prev + rotate(step * config.scale_f, *phi);
  CHECK(!raycast(seg_map, prev, chosen_probe, kPassFta).hit);

  // Fully enclosed box: nothing clears.
  Palette p;
  ImageRgb img = blank_raster(30, 30, p);
  add_border(img, 2, p.wall);
  fill_rect(img, 10, 10, 20, 12, p.wall);
  fill_rect(img, 10, 18, 20, 20, p.wall);
  fill_rect(img, 10, 12, 12, 18, p.wall);
  fill_rect(img, 18, 12, 20, 18, p.wall);
  const auto box = compile_map({img, p}, 10.0, 0.3, 0);
  const Vec2 center = box.ics_to_mcs({15.0, 15.0});
  CHECK(!find_optimal_rotation(box, center, {2.0, 0.0}, angles, config.scale_f).has_value());
}

TEST_CASE("correct: passthrough when the step is feasible") {
  const auto map = wall_box_map();
  FusionConfig fc;
  fc.particle_count = 10;
  auto particles = ParticleSet::init({2.0, 5.0}, fc, 14);
  PpcState state;
  state.current_room = map.room_of({2.0, 5.0});
  const auto before = particles.positions();
  const auto outcome =
      correct(map, {2.0, 5.0}, {2.5, 5.0}, Vec2{2.4, 5.0}, particles, PpcConfig{}, state);
  CHECK(outcome.case_id == 0);
  CHECK(outcome.position == Vec2{2.5, 5.0});
  CHECK(particles.positions() == before);
}

TEST_CASE("correct: wall ahead rotates the step and translates particles") {
  const auto map = wall_box_map();
  FusionConfig fc;
  fc.particle_count = 50;
  const Vec2 prev{4.45, 5.0};
  auto particles = ParticleSet::init(prev, fc, 15);
  particles.propagate({0, 0.6, 0.0});
  const Vec2 mean_before = particles.estimate();
  PpcState state;
  state.current_room = map.room_of(prev);

  const Vec2 estimate = prev + Vec2{0.6, 0.0};  // straight into the wall at x=5
  const auto outcome = correct(map, prev, estimate, std::nullopt, particles, PpcConfig{}, state);
  CHECK(outcome.case_id == 1);
  REQUIRE(outcome.phi_star_rad.has_value());
  const Vec2 expected = prev + rotate(Vec2{0.6, 0.0}, *outcome.phi_star_rad);
  CHECK((outcome.position - expected).norm() < 1e-12);
  CHECK(!raycast(map, prev, outcome.position, kPassFta).hit);

  // Particle-estimate coherence after the rigid translation.
  const Vec2 mean_after = particles.estimate();
  const Vec2 delta_mean = mean_after - mean_before;
  const Vec2 delta_out = outcome.position - estimate;
  CHECK((delta_mean - delta_out).norm() < 1e-12);
}

TEST_CASE("correct: blocked step backs off from the hit point") {
  // Narrow dead-end: every rotation probe is blocked.
  Palette p;
  ImageRgb img = blank_raster(60, 60, p);
  add_border(img, 2, p.wall);
  fill_rect(img, 20, 20, 40, 22, p.wall);
  fill_rect(img, 20, 38, 40, 40, p.wall);
  fill_rect(img, 38, 22, 40, 38, p.wall);
  const auto map = compile_map({img, p}, 10.0, 0.3, 0);
  const Vec2 prev = map.ics_to_mcs({30.5, 30.0});

  FusionConfig fc;
  fc.particle_count = 5;
  auto particles = ParticleSet::init(prev, fc, 16);
  PpcState state;
  state.current_room = map.room_of(prev);
  PpcConfig config;
  config.n_angles = 3;  // keep probes inside the dead end

  const Vec2 estimate = prev + Vec2{1.2, 0.0};
  const auto outcome = correct(map, prev, estimate, std::nullopt, particles, config, state);
  CHECK(outcome.case_id == 2);
  CHECK(state.case2_streak == 1);
  REQUIRE(outcome.hit.has_value());
  const Vec2 expect = *outcome.hit - Vec2{1.2, 0.0} * config.epsilon;
  CHECK((outcome.position - expect).norm() < 1e-9);
  CHECK(!raycast(map, prev, outcome.position, kPassFta).hit);
}

TEST_CASE("correct: door passage switches rooms (two-room oracle)") {
  const auto map = compile_map(two_room_raster(), 10.0, 0.3, 1);
  const int room_a = *map.room_of({3.0, 4.2});
  const int room_b = *map.room_of({11.0, 4.2});

  FusionConfig fc;
  fc.particle_count = 20;
  const Vec2 prev{6.8, 4.2};
  auto particles = ParticleSet::init(prev, fc, 17);
  PpcState state;
  state.current_room = room_a;

  const Vec2 estimate{7.6, 4.2};  // across the doorway
  const Vec2 fix{8.2, 4.2};       // BLE already in room B
  PpcConfig config;
  const auto outcome = correct(map, prev, estimate, fix, particles, config, state);
  CHECK(outcome.case_id == 3);
  CHECK(state.current_room == room_b);
  // Landed just past the nearest contour point, within epsilon of the step.
  CHECK(outcome.position.x > 7.4);
  CHECK(outcome.position.x < 7.4 + config.epsilon * 0.8 + 0.2);
  CHECK(map.value_at(outcome.position) <= kPassFta);

  // Same-room fix keeps the door shut (Case 2).
  PpcState state2;
  state2.current_room = room_a;
  auto particles2 = ParticleSet::init(prev, fc, 18);
  const auto blocked =
      correct(map, prev, estimate, Vec2{5.0, 4.2}, particles2, config, state2);
  CHECK(blocked.case_id == 2);
  CHECK(state2.current_room == room_a);
}

TEST_CASE("correct: case-2 streak resets to the BLE fix") {
  const auto map = wall_box_map();
  FusionConfig fc;
  fc.particle_count = 8;
  PpcConfig config;
  config.n_angles = 1;  // make rotations useless so every step blocks
  config.delta_phi_rad = 0.01;
  PpcState state;
  const Vec2 prev{4.93, 5.0};
  state.current_room = map.room_of(prev);
  auto particles = ParticleSet::init(prev, fc, 19);
  const Vec2 fix{3.0, 5.0};

  for (int i = 1; i < config.case2_streak_limit; ++i) {
    const auto c = correct(map, prev, prev + Vec2{0.6, 0.0}, fix, particles, config, state);
    CHECK(c.case_id == 2);
    CHECK(!c.ble_reset);
    CHECK(state.case2_streak == i);
  }
  const auto final_c = correct(map, prev, prev + Vec2{0.6, 0.0}, fix, particles, config, state);
  CHECK(final_c.ble_reset);
  CHECK(final_c.position == fix);
  CHECK(state.case2_streak == 0);
}

TEST_CASE("feasibility invariant on random maps") {
  CounterRng rng(303, 62);
  for (uint64_t seed : {1, 2, 3, 4}) {
    const auto raster = random_raster(40 + seed, 80, 80, 4, true);
    const auto map = compile_map(raster, 10.0, 0.3, 0);
    const auto& grid = map.grid().points;
    if (grid.empty()) continue;
    FusionConfig fc;
    fc.particle_count = 4;
    PpcConfig config;
    PpcState state;
    for (int trial = 0; trial < 200; ++trial) {
      const Vec2 prev = grid[static_cast<size_t>(rng.next_double() * grid.size())];
      const double len = rng.next_uniform(0.2, 1.2);
      const double ang = rng.next_uniform(-M_PI, M_PI);
      const Vec2 estimate = prev + Vec2{len * std::cos(ang), len * std::sin(ang)};
      auto particles = ParticleSet::init(prev, fc, trial);
      state.current_room = map.room_of(prev);
      state.case2_streak = 0;
      const auto outcome = correct(map, prev, estimate, std::nullopt, particles, config, state);
      if (!outcome.ble_reset) {
        const auto check = raycast(map, prev, outcome.position, kPassFta);
        CHECK((!check.hit || check.point == prev));
      }
    }
  }
}
