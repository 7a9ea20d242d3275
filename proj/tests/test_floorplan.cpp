#include "fpbp/floorplan.hpp"

#include <doctest.h>

#include <deque>
#include <set>

#include "fpbp/errors.hpp"
#include "fpbp/rng.hpp"
#include "test_maps.hpp"

using namespace fpbp;
using namespace fpbp::testmaps;

namespace {

// Independent room oracle: 4-connected flood fill over free pixels, labels
// in scan order (matching the compiler's labeling convention).
std::vector<int> flood_fill_rooms(const FloorPlanMap& map) {
  const int w = map.width_px();
  const int h = map.height_px();
  std::vector<int> labels(static_cast<size_t>(w) * h, -1);
  auto free_px = [&](int x, int y) {
    const MapFeature f = map.feature_px(x, y);
    return f == MapFeature::Walkable || f == MapFeature::Fta;
  };
  int next = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!free_px(x, y) || labels[y * w + x] >= 0) continue;
      std::deque<std::pair<int, int>> q{{x, y}};
      labels[y * w + x] = next;
      while (!q.empty()) {
        auto [cx, cy] = q.front();
        q.pop_front();
        const int nbr[4][2] = {{cx + 1, cy}, {cx - 1, cy}, {cx, cy + 1}, {cx, cy - 1}};
        for (const auto& nb : nbr) {
          const int nx = nb[0];
          const int ny = nb[1];
          if (nx < 0 || nx >= w || ny < 0 || ny >= h || !free_px(nx, ny)) continue;
          if (labels[ny * w + nx] < 0) {
            labels[ny * w + nx] = next;
            q.push_back({nx, ny});
          }
        }
      }
      ++next;
    }
  }
  return labels;
}

}  // namespace

TEST_CASE("all-white raster compiles to walkable field with interior grid") {
  StylizedRaster raster{blank_raster(10, 10), {}};
  const auto map = compile_map(raster, 10.0, 0.3, 0);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) CHECK(map.feature_px(x, y) == MapFeature::Walkable);
  CHECK(!map.grid().points.empty());
  for (const auto& g : map.grid().points) CHECK(map.feature_at(g) == MapFeature::Walkable);
  // Whole free area forms one implicit room.
  int rooms = 0;
  for (const auto& c : map.contours())
    if (c.kind == Contour::Kind::RoomBoundary) ++rooms;
  CHECK(rooms == 1);
}

TEST_CASE("framed room with a door run") {
  Palette p;
  ImageRgb img = blank_raster(20, 20, p);
  add_border(img, 2, p.wall);
  fill_rect(img, 8, 0, 12, 2, p.door);
  const auto map = compile_map({img, p}, 10.0, 0.3, 0);
  int rooms = 0;
  for (const auto& c : map.contours())
    if (c.kind == Contour::Kind::RoomBoundary) ++rooms;
  CHECK(rooms == 1);
  CHECK(map.feature_px(9, 1) == MapFeature::Door);
  CHECK(map.value_at(map.ics_to_mcs({9.5, 1.5})) == 0.5);
}

TEST_CASE("experiment-scale resolution accepted") {
  StylizedRaster raster{blank_raster(40, 40), {}};
  const double r = 1.0 / 0.07;
  CHECK_NOTHROW(compile_map(raster, r, 0.3, 6));
}

TEST_CASE("unknown color and degenerate rasters are rejected") {
  Palette p;
  ImageRgb img = blank_raster(8, 8, p);
  img.at(3, 4) = {12, 200, 7};
  CHECK_THROWS_AS(compile_map({img, p}, 10.0, 0.3, 0), UnknownColorError);
  try {
    compile_map({img, p}, 10.0, 0.3, 0);
  } catch (const UnknownColorError& e) {
    CHECK(e.x_px == 3);
    CHECK(e.y_px == 4);
  }

  ImageRgb walls(8, 8, p.wall);
  CHECK_THROWS_AS(compile_map({walls, p}, 10.0, 0.3, 0), DegenerateMapError);
  CHECK_THROWS_AS(compile_map({blank_raster(8, 8, p), p}, 10.0, 0.05, 0), ConfigError);
}

TEST_CASE("coordinate transforms") {
  StylizedRaster raster{blank_raster(100, 100), {}};
  const auto map = compile_map(raster, 10.0, 0.3, 0);

  // r = 10, H = 100: (20, 30) ICS -> (2.0, 7.0) MCS.
  const Vec2 m = map.ics_to_mcs({20, 30});
  CHECK(m.x == doctest::Approx(2.0));
  CHECK(m.y == doctest::Approx(7.0));
  // Origin correspondence.
  const Vec2 o = map.ics_to_mcs({0, 100});
  CHECK(o.x == 0.0);
  CHECK(o.y == 0.0);

  CounterRng rng(11, 5);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p{std::floor(rng.next_uniform(0, 100)) + 0.5,
                 std::floor(rng.next_uniform(0, 100)) + 0.5};
    const Vec2 back = map.mcs_to_ics(map.ics_to_mcs(p));
    CHECK(back.x == doctest::Approx(p.x).epsilon(1e-12));
    CHECK(back.y == doctest::Approx(p.y).epsilon(1e-12));
  }
}

TEST_CASE("feature_at distinguishes the four classes and bounds-checks") {
  Palette p;
  ImageRgb img = blank_raster(10, 10, p);
  img.at(2, 2) = p.wall;
  img.at(3, 2) = p.door;
  img.at(4, 2) = p.fta;
  const auto map = compile_map({img, p}, 1.0, 2.0, 0);
  CHECK(map.feature_at(map.ics_to_mcs({2.5, 2.5})) == MapFeature::Wall);
  CHECK(map.feature_at(map.ics_to_mcs({3.5, 2.5})) == MapFeature::Door);
  CHECK(map.feature_at(map.ics_to_mcs({4.5, 2.5})) == MapFeature::Fta);
  CHECK(map.feature_at(map.ics_to_mcs({5.5, 2.5})) == MapFeature::Walkable);
  CHECK(feature_value(MapFeature::Fta) == 0.25);
  CHECK_THROWS_AS(map.feature_at({-1.0, 5.0}), OutOfBoundsError);
  CHECK_THROWS_AS(map.feature_at({5.0, 50.0}), OutOfBoundsError);
}

TEST_CASE("mask partition: each pixel maps to exactly one class value") {
  for (uint64_t seed : {1, 2, 3}) {
    const auto raster = random_raster(seed, 60, 60, 4, true, true);
    const auto map = compile_map(raster, 10.0, 0.3, 0);
    for (int y = 0; y < map.height_px(); ++y) {
      for (int x = 0; x < map.width_px(); ++x) {
        const double v = feature_value(map.feature_px(x, y));
        const bool is_wall = v == 1.0;
        const bool is_door = v == 0.5;
        const bool is_fta = v == 0.25;
        const bool is_walk = v == 0.0;
        CHECK(int(is_wall) + int(is_door) + int(is_fta) + int(is_walk) == 1);
      }
    }
  }
}

TEST_CASE("grid purity and lattice spacing") {
  const auto raster = random_raster(7, 80, 80, 5);
  const auto map = compile_map(raster, 10.0, 0.3, 0);
  REQUIRE(!map.grid().points.empty());
  std::set<std::pair<long, long>> cells;
  for (const auto& g : map.grid().points) {
    CHECK(map.feature_at(g) == MapFeature::Walkable);
    // Points sit on the (i+0.5)*I_M lattice, strictly inside the extent.
    const double fi = g.x / 0.3 - 0.5;
    const double fj = g.y / 0.3 - 0.5;
    CHECK(std::abs(fi - std::round(fi)) < 1e-9);
    CHECK(std::abs(fj - std::round(fj)) < 1e-9);
    CHECK(g.x > 0.0);
    CHECK(g.x < 8.0);
    CHECK(g.y > 0.0);
    CHECK(g.y < 8.0);
    cells.insert({std::lround(fi), std::lround(fj)});
  }
  CHECK(cells.size() == map.grid().points.size());
}

TEST_CASE("surface normals point from obstacle into walkable space") {
  Palette p;
  ImageRgb img = blank_raster(40, 40, p);
  fill_rect(img, 20, 0, 40, 40, p.wall);  // east half wall
  const auto map = compile_map({img, p}, 10.0, 0.3, 0);
  const Vec2 n = map.surface_normal_at(map.ics_to_mcs({20.5, 20.5}));
  CHECK(n.x == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(n.y == doctest::Approx(0.0).epsilon(1e-6));

  ImageRgb img2 = blank_raster(40, 40, p);
  fill_rect(img2, 0, 20, 40, 40, p.wall);  // wall below (in MCS)
  const auto map2 = compile_map({img2, p}, 10.0, 0.3, 0);
  const Vec2 n2 = map2.surface_normal_at(map2.ics_to_mcs({20.5, 20.5}));
  CHECK(n2.x == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(n2.y == doctest::Approx(1.0).epsilon(1e-6));

  // Interior of a large obstacle has no gradient.
  CHECK_THROWS_AS(map.surface_normal_at(map.ics_to_mcs({35.5, 20.5})), ZeroGradientError);
}

TEST_CASE("45-degree wall normal within 10 degrees of the analytic normal") {
  Palette p;
  ImageRgb img = blank_raster(60, 60, p);
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 60; ++x)
      if (x + y >= 60) img.at(x, y) = p.wall;
  const auto map = compile_map({img, p}, 10.0, 0.3, 0);
  // The rasterized edge runs diagonally; in MCS the walkable side is up-left,
  // so the analytic normal is (-1, +1)/sqrt(2).
  const Vec2 expect = Vec2{-1.0, 1.0}.normalized();
  for (int d = 20; d <= 40; d += 5) {
    const Vec2 n = map.surface_normal_at(map.ics_to_mcs({d + 0.5, 60.0 - d - 0.5}));
    const double angle = std::acos(std::clamp(n.dot(expect), -1.0, 1.0));
    CHECK(angle < 10.0 * M_PI / 180.0);
  }
}

TEST_CASE("room_of matches the flood-fill oracle on every free pixel") {
  for (uint64_t seed : {11, 22, 33, 44}) {
    const auto raster = random_raster(seed, 70, 70, 5, true);
    const auto map = compile_map(raster, 10.0, 0.3, 0);
    const auto labels = flood_fill_rooms(map);
    for (int y = 0; y < map.height_px(); ++y) {
      for (int x = 0; x < map.width_px(); ++x) {
        const auto room = map.room_of(map.ics_to_mcs({x + 0.5, y + 0.5}));
        const int label = labels[y * map.width_px() + x];
        if (label < 0) {
          CHECK(!room.has_value());
        } else {
          REQUIRE(room.has_value());
          CHECK(*room == label);
        }
      }
    }
  }
}

TEST_CASE("room_of: wall point has no room, rooms across a door differ") {
  const auto raster = two_room_raster();
  const auto map = compile_map(raster, 10.0, 0.3, 1);
  const auto room_a = map.room_of({3.0, 4.0});
  const auto room_b = map.room_of({11.0, 4.0});
  REQUIRE(room_a.has_value());
  REQUIRE(room_b.has_value());
  CHECK(*room_a != *room_b);
  CHECK(!map.room_of({7.2, 7.0}).has_value());  // inside the dividing wall
  CHECK(map.rooms_adjacent_to_door({7.2, 4.2}) == std::vector<int>{*room_a, *room_b});
}

TEST_CASE("closest_contour_point: perpendicular foot and brute-force agreement") {
  Palette p;
  ImageRgb img = blank_raster(40, 40, p);
  add_border(img, 2, p.wall);
  const auto map = compile_map({img, p}, 10.0, 0.3, 0);
  // 1 m from the west wall face: foot of the perpendicular.
  const Vec2 c = map.closest_contour_point({1.2, 2.0});
  CHECK(c.x == doctest::Approx(0.2));
  CHECK(c.y == doctest::Approx(2.0));

  // Brute force over densified contour edges.
  CounterRng rng(5, 9);
  for (uint64_t seed : {3, 8}) {
    const auto raster = random_raster(seed, 50, 50, 4);
    const auto m = compile_map(raster, 10.0, 0.3, 0);
    for (int trial = 0; trial < 50; ++trial) {
      const Vec2 q{rng.next_uniform(0.5, 4.5), rng.next_uniform(0.5, 4.5)};
      const Vec2 got = m.closest_contour_point(q);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& contour : m.contours()) {
        const auto& poly = contour.vertices_px;
        for (size_t i = 0; i < poly.size(); ++i) {
          const Vec2 a = m.ics_to_mcs(poly[i]);
          const Vec2 b = m.ics_to_mcs(poly[(i + 1) % poly.size()]);
          const double len = (b - a).norm();
          const int n = std::max(1, static_cast<int>(len / 0.002));
          for (int k = 0; k <= n; ++k)
            best = std::min(best, (q - (a + (b - a) * (double(k) / n))).norm());
        }
      }
      CHECK((q - got).norm() == doctest::Approx(best).epsilon(1e-3));
    }
  }
}

TEST_CASE("compile_map is deterministic and the artifact round-trips byte-identically") {
  const auto raster = random_raster(99, 60, 60, 5, true, true);
  const auto map1 = compile_map(raster, 10.0, 0.3, 3, 0.1);
  const auto map2 = compile_map(raster, 10.0, 0.3, 3, 0.1);
  const std::string a1 = map1.to_artifact_json();
  CHECK(a1 == map2.to_artifact_json());

  const auto restored = FloorPlanMap::from_artifact_json(a1);
  CHECK(restored.to_artifact_json() == a1);
  CHECK(restored.width_px() == map1.width_px());
  CHECK(restored.grid().points.size() == map1.grid().points.size());
  CHECK(restored.floor_id() == 3);
  CHECK(restored.north_offset_rad() == doctest::Approx(0.1));
  CHECK(restored.room_of({3.0, 3.0}) == map1.room_of({3.0, 3.0}));
}

TEST_CASE("artifact reader rejects unknown schema majors") {
  CHECK_THROWS_AS(FloorPlanMap::from_artifact_json("{\"schema\":\"fpbp-map/2\"}"), FormatError);
  CHECK_THROWS_AS(FloorPlanMap::from_artifact_json("not json"), FormatError);
}
