#include "fpbp/floorplan.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <set>

#include <json.hpp>

#include "fpbp/errors.hpp"

namespace fpbp {

using nlohmann::json;

std::optional<MapFeature> Palette::classify(const Rgb& c) const {
  if (c == walkable) return MapFeature::Walkable;
  if (c == wall) return MapFeature::Wall;
  if (c == door) return MapFeature::Door;
  if (c == fta) return MapFeature::Fta;
  return std::nullopt;
}

Rgb Palette::color_of(MapFeature f) const {
  switch (f) {
    case MapFeature::Walkable:
      return walkable;
    case MapFeature::Fta:
      return fta;
    case MapFeature::Door:
      return door;
    case MapFeature::Wall:
      return wall;
  }
  return wall;
}

MapFeature FloorPlanMap::feature_at(const Vec2& p_mcs) const {
  const Vec2 p_ics = mcs_to_ics(p_mcs);
  const int x = static_cast<int>(std::floor(p_ics.x));
  const int y = static_cast<int>(std::floor(p_ics.y));
  if (!in_bounds_ics(x, y))
    throw OutOfBoundsError("point (" + std::to_string(p_mcs.x) + ", " + std::to_string(p_mcs.y) +
                           ") outside map extent");
  return feature_px(x, y);
}

double FloorPlanMap::value_at(const Vec2& p_mcs) const {
  const Vec2 p_ics = mcs_to_ics(p_mcs);
  const int x = static_cast<int>(std::floor(p_ics.x));
  const int y = static_cast<int>(std::floor(p_ics.y));
  return feature_value(feature_px_clamped(x, y));
}

bool FloorPlanMap::contains(const Vec2& p_mcs) const {
  const Vec2 p_ics = mcs_to_ics(p_mcs);
  const int x = static_cast<int>(std::floor(p_ics.x));
  const int y = static_cast<int>(std::floor(p_ics.y));
  return in_bounds_ics(x, y);
}

Vec2 FloorPlanMap::surface_normal_at(const Vec2& p_mcs) const {
  const Vec2 p_ics = mcs_to_ics(p_mcs);
  const int x = static_cast<int>(std::floor(p_ics.x));
  const int y = static_cast<int>(std::floor(p_ics.y));
  auto v = [&](int dx, int dy) { return feature_value(feature_px_clamped(x + dx, y + dy)); };
  // Sobel on the feature image; the gradient points toward higher M, i.e.
  // into the obstacle.
  const double gx = (v(1, -1) + 2.0 * v(1, 0) + v(1, 1)) - (v(-1, -1) + 2.0 * v(-1, 0) + v(-1, 1));
  const double gy = (v(-1, 1) + 2.0 * v(0, 1) + v(1, 1)) - (v(-1, -1) + 2.0 * v(0, -1) + v(1, -1));
  const double mag = std::hypot(gx, gy);
  if (mag < 1e-9)
    throw ZeroGradientError("no boundary gradient at (" + std::to_string(p_mcs.x) + ", " +
                            std::to_string(p_mcs.y) + ")");
  // ICS -> MCS flips the y axis; normal points from obstacle to walkable.
  Vec2 n = Vec2{-gx / mag, gy / mag};
  const double px_m = 1.0 / resolution_r_;
  const double ahead = value_at(p_mcs + n * px_m);
  const double behind = value_at(p_mcs - n * px_m);
  if (ahead > behind) n = n * -1.0;
  return n;
}

std::optional<int> FloorPlanMap::room_of(const Vec2& p_mcs) const {
  const Vec2 p_ics = mcs_to_ics(p_mcs);
  const int x = static_cast<int>(std::floor(p_ics.x));
  const int y = static_cast<int>(std::floor(p_ics.y));
  if (!in_bounds_ics(x, y)) return std::nullopt;
  const MapFeature f = feature_px(x, y);
  if (f == MapFeature::Wall || f == MapFeature::Door) return std::nullopt;
  // Innermost containing room boundary wins; nesting can occur when a room
  // sits inside another room's interior obstacle.
  int best = -1;
  double best_area = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < contours_.size(); ++i) {
    if (contours_[i].kind != Contour::Kind::RoomBoundary) continue;
    if (!point_in_polygon(contours_[i].vertices_px, p_ics)) continue;
    const double area = std::abs(polygon_area(contours_[i].vertices_px));
    if (area < best_area) {
      best_area = area;
      best = contours_[i].room_id;
    }
  }
  if (best < 0) return std::nullopt;
  return best;
}

Vec2 FloorPlanMap::closest_contour_point(const Vec2& p_mcs,
                                         const std::vector<int>* contour_filter) const {
  if (contours_mcs_.empty()) throw DataError("map has no contours");
  double best = std::numeric_limits<double>::infinity();
  Vec2 best_point = p_mcs;
  for (size_t ci = 0; ci < contours_mcs_.size(); ++ci) {
    if (contour_filter != nullptr &&
        std::find(contour_filter->begin(), contour_filter->end(), static_cast<int>(ci)) ==
            contour_filter->end())
      continue;
    const auto& poly = contours_mcs_[ci];
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
      Vec2 q;
      const double d = point_segment_distance(p_mcs, poly[i], poly[(i + 1) % n], &q);
      if (d < best) {
        best = d;
        best_point = q;
      }
    }
  }
  return best_point;
}

namespace {

// Connected door pixels containing (x0, y0); empty if that pixel is no door.
std::set<std::pair<int, int>> flood_door_region(const FloorPlanMap& map, int x0, int y0) {
  if (!map.in_bounds_ics(x0, y0) || map.feature_px(x0, y0) != MapFeature::Door) return {};
  std::set<std::pair<int, int>> region{{x0, y0}};
  std::deque<std::pair<int, int>> queue{{x0, y0}};
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    const int nbr[4][2] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
    for (const auto& nb : nbr) {
      if (!map.in_bounds_ics(nb[0], nb[1])) continue;
      if (map.feature_px(nb[0], nb[1]) != MapFeature::Door) continue;
      if (region.insert({nb[0], nb[1]}).second) queue.push_back({nb[0], nb[1]});
    }
  }
  return region;
}

}  // namespace

std::vector<int> FloorPlanMap::rooms_adjacent_to_door(const Vec2& p_mcs) const {
  const Vec2 p_ics = mcs_to_ics(p_mcs);
  const auto region = flood_door_region(*this, static_cast<int>(std::floor(p_ics.x)),
                                        static_cast<int>(std::floor(p_ics.y)));
  std::set<int> rooms;
  for (const auto& [x, y] : region) {
    const int nbr[4][2] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
    for (const auto& nb : nbr) {
      if (!in_bounds_ics(nb[0], nb[1])) continue;
      const MapFeature f = feature_px(nb[0], nb[1]);
      if (f == MapFeature::Door || f == MapFeature::Wall) continue;
      if (auto room = room_of(ics_to_mcs({nb[0] + 0.5, nb[1] + 0.5}))) rooms.insert(*room);
    }
  }
  return {rooms.begin(), rooms.end()};
}

std::vector<FloorPlanMap::InterfaceEdge> FloorPlanMap::door_room_interface(const Vec2& p_mcs,
                                                                           int room_id) const {
  const Vec2 p_ics = mcs_to_ics(p_mcs);
  const auto region = flood_door_region(*this, static_cast<int>(std::floor(p_ics.x)),
                                        static_cast<int>(std::floor(p_ics.y)));
  std::vector<InterfaceEdge> segments;
  for (const auto& [x, y] : region) {
    const int nbr[4][2] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
    for (const auto& nb : nbr) {
      if (!in_bounds_ics(nb[0], nb[1])) continue;
      const MapFeature f = feature_px(nb[0], nb[1]);
      if (f == MapFeature::Door || f == MapFeature::Wall) continue;
      const auto room = room_of(ics_to_mcs({nb[0] + 0.5, nb[1] + 0.5}));
      if (!room || *room != room_id) continue;
      // Shared pixel edge between (x, y) and the neighbor, in ICS corners;
      // the inward direction is axis-aligned toward the room (y flips in
      // the ICS -> MCS transform).
      Vec2 a, b, inward;
      if (nb[0] == x + 1) {
        a = {double(x + 1), double(y)};
        b = {double(x + 1), double(y + 1)};
        inward = {1.0, 0.0};
      } else if (nb[0] == x - 1) {
        a = {double(x), double(y)};
        b = {double(x), double(y + 1)};
        inward = {-1.0, 0.0};
      } else if (nb[1] == y + 1) {
        a = {double(x), double(y + 1)};
        b = {double(x + 1), double(y + 1)};
        inward = {0.0, -1.0};
      } else {
        a = {double(x), double(y)};
        b = {double(x + 1), double(y)};
        inward = {0.0, 1.0};
      }
      segments.push_back({ics_to_mcs(a), ics_to_mcs(b), inward});
    }
  }
  return segments;
}

void FloorPlanMap::rebuild_caches() {
  contours_mcs_.clear();
  contours_mcs_.reserve(contours_.size());
  for (const auto& c : contours_) {
    std::vector<Vec2> poly;
    poly.reserve(c.vertices_px.size());
    for (const auto& v : c.vertices_px) poly.push_back(ics_to_mcs(v));
    contours_mcs_.push_back(std::move(poly));
  }
}

namespace {

// Directions for the crack-following contour tracer: E, S, W, N in image
// coordinates (y down). Boundary edges keep the free region on their left,
// with left(d) = (d.y, -d.x).
constexpr int kDx[4] = {1, 0, -1, 0};
constexpr int kDy[4] = {0, 1, 0, -1};

struct EdgeTracer {
  int w, h;
  const std::vector<MapFeature>& features;
  const std::vector<int>& labels;  // free-pixel component labels, -1 elsewhere

  bool free_px(int x, int y) const {
    if (x < 0 || x >= w || y < 0 || y >= h) return false;
    const MapFeature f = features[static_cast<size_t>(y) * w + x];
    return f == MapFeature::Walkable || f == MapFeature::Fta;
  }

  // Left/right pixels of the directed edge starting at corner (cx, cy).
  std::pair<int, int> left_pixel(int cx, int cy, int dir) const {
    switch (dir) {
      case 0:
        return {cx, cy - 1};
      case 1:
        return {cx, cy};
      case 2:
        return {cx - 1, cy};
      default:
        return {cx - 1, cy - 1};
    }
  }
  std::pair<int, int> right_pixel(int cx, int cy, int dir) const {
    switch (dir) {
      case 0:
        return {cx, cy};
      case 1:
        return {cx - 1, cy};
      case 2:
        return {cx - 1, cy - 1};
      default:
        return {cx, cy - 1};
    }
  }

  bool edge_exists(int cx, int cy, int dir) const {
    const auto [lx, ly] = left_pixel(cx, cy, dir);
    const auto [rx, ry] = right_pixel(cx, cy, dir);
    return free_px(lx, ly) && !free_px(rx, ry);
  }

  size_t edge_id(int cx, int cy, int dir) const {
    return (static_cast<size_t>(cy) * (w + 1) + cx) * 4 + dir;
  }
};

}  // namespace

FloorPlanMap compile_map(const StylizedRaster& raster, double resolution_r, double interval_m,
                         int floor_id, double north_offset_rad) {
  const ImageRgb& img = raster.image;
  if (img.width < 2 || img.height < 2) throw ConfigError("raster must be at least 2x2 pixels");
  if (resolution_r <= 0.0) throw ConfigError("resolution must be positive");
  if (interval_m <= 1.0 / resolution_r)
    throw ConfigError("grid interval must exceed one pixel (1/r)");

  FloorPlanMap map;
  map.width_ = img.width;
  map.height_ = img.height;
  map.resolution_r_ = resolution_r;
  map.floor_id_ = floor_id;
  map.north_offset_rad_ = north_offset_rad;
  map.features_.resize(static_cast<size_t>(img.width) * img.height);

  bool any_walkable = false;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Rgb& c = img.at(x, y);
      const auto f = raster.palette.classify(c);
      if (!f) throw UnknownColorError(x, y, rgb_to_hex(c));
      map.features_[static_cast<size_t>(y) * img.width + x] = *f;
      if (*f == MapFeature::Walkable) any_walkable = true;
    }
  }
  if (!any_walkable) throw DegenerateMapError("raster has no walkable pixels");

  // Label 4-connected free components (walkable + FTA); ids in scan order.
  const int w = img.width;
  const int h = img.height;
  std::vector<int> labels(static_cast<size_t>(w) * h, -1);
  auto is_free = [&](int x, int y) {
    const MapFeature f = map.features_[static_cast<size_t>(y) * w + x];
    return f == MapFeature::Walkable || f == MapFeature::Fta;
  };
  int next_label = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!is_free(x, y) || labels[static_cast<size_t>(y) * w + x] >= 0) continue;
      std::deque<std::pair<int, int>> queue{{x, y}};
      labels[static_cast<size_t>(y) * w + x] = next_label;
      while (!queue.empty()) {
        auto [cx, cy] = queue.front();
        queue.pop_front();
        const int nbr[4][2] = {{cx + 1, cy}, {cx - 1, cy}, {cx, cy + 1}, {cx, cy - 1}};
        for (const auto& nb : nbr) {
          const int nx = nb[0];
          const int ny = nb[1];
          if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
          if (!is_free(nx, ny)) continue;
          int& lab = labels[static_cast<size_t>(ny) * w + nx];
          if (lab < 0) {
            lab = next_label;
            queue.push_back({nx, ny});
          }
        }
      }
      ++next_label;
    }
  }
  map.room_count_ = next_label;

  // Trace boundary loops along pixel cracks. Each loop keeps its free
  // component on the left, so outer rings and holes come out with opposite
  // winding and can be told apart by signed area.
  EdgeTracer tracer{w, h, map.features_, labels};
  std::vector<bool> used(static_cast<size_t>(w + 1) * (h + 1) * 4, false);
  std::vector<Contour> rooms;
  std::vector<Contour> holes;
  for (int cy = 0; cy <= h; ++cy) {
    for (int cx = 0; cx <= w; ++cx) {
      for (int dir = 0; dir < 4; ++dir) {
        if (used[tracer.edge_id(cx, cy, dir)] || !tracer.edge_exists(cx, cy, dir)) continue;
        std::vector<Vec2> corners;
        const auto [lx0, ly0] = tracer.left_pixel(cx, cy, dir);
        const int component = labels[static_cast<size_t>(ly0) * w + lx0];
        int x = cx;
        int y = cy;
        int d = dir;
        do {
          used[tracer.edge_id(x, y, d)] = true;
          corners.push_back({static_cast<double>(x), static_cast<double>(y)});
          x += kDx[d];
          y += kDy[d];
          // Prefer the left turn so checkerboard corners stay with this
          // component, then straight, then right.
          const int candidates[3] = {(d + 3) % 4, d, (d + 1) % 4};
          int chosen = -1;
          for (int c : candidates) {
            if (tracer.edge_exists(x, y, c)) {
              chosen = c;
              break;
            }
          }
          if (chosen < 0) throw DataError("contour tracing failed (broken boundary)");
          d = chosen;
        } while (!(x == cx && y == cy && d == dir));

        // Drop collinear run vertices.
        std::vector<Vec2> poly;
        const size_t n = corners.size();
        for (size_t i = 0; i < n; ++i) {
          const Vec2& prev = corners[(i + n - 1) % n];
          const Vec2& cur = corners[i];
          const Vec2& next = corners[(i + 1) % n];
          if (cross(cur - prev, next - cur) != 0.0) poly.push_back(cur);
        }
        Contour contour;
        contour.room_id = component;
        contour.vertices_px = std::move(poly);
        // Free-on-left tracing makes outer rings negative-area in image
        // coordinates and holes positive.
        if (polygon_area(contour.vertices_px) < 0.0) {
          contour.kind = Contour::Kind::RoomBoundary;
          rooms.push_back(std::move(contour));
        } else {
          contour.kind = Contour::Kind::InteriorObstacle;
          holes.push_back(std::move(contour));
        }
      }
    }
  }
  auto by_room = [](const Contour& a, const Contour& b) { return a.room_id < b.room_id; };
  std::stable_sort(rooms.begin(), rooms.end(), by_room);
  std::stable_sort(holes.begin(), holes.end(), by_room);
  map.contours_ = std::move(rooms);
  map.contours_.insert(map.contours_.end(), holes.begin(), holes.end());

  // Virtual grid array: g_ij = ((i+0.5) I_M, (j+0.5) I_M) clipped to the
  // index bounds 1..floor(extent/I_M)-1, keeping Walkable points only.
  map.grid_.interval_m = interval_m;
  const double extent_x = w / resolution_r;
  const double extent_y = h / resolution_r;
  const int i_max = static_cast<int>(std::floor(extent_x / interval_m)) - 1;
  const int j_max = static_cast<int>(std::floor(extent_y / interval_m)) - 1;
  for (int j = 1; j <= j_max; ++j) {
    for (int i = 1; i <= i_max; ++i) {
      const Vec2 g{(i + 0.5) * interval_m, (j + 0.5) * interval_m};
      const Vec2 g_ics = map.mcs_to_ics(g);
      const int px = static_cast<int>(std::floor(g_ics.x));
      const int py = static_cast<int>(std::floor(g_ics.y));
      if (map.in_bounds_ics(px, py) && map.feature_px(px, py) == MapFeature::Walkable)
        map.grid_.points.push_back(g);
    }
  }

  map.rebuild_caches();
  return map;
}

std::string FloorPlanMap::to_artifact_json() const {
  json j;
  j["schema"] = "fpbp-map/1";
  j["floor_id"] = floor_id_;
  j["resolution_r"] = resolution_r_;
  j["north_offset_rad"] = north_offset_rad_;
  j["width_px"] = width_;
  j["height_px"] = height_;
  j["grid_interval_m"] = grid_.interval_m;
  j["room_count"] = room_count_;

  json rle = json::array();
  size_t i = 0;
  const size_t total = features_.size();
  while (i < total) {
    size_t run = 1;
    while (i + run < total && features_[i + run] == features_[i]) ++run;
    rle.push_back({static_cast<int>(features_[i]), run});
    i += run;
  }
  j["feature_rle"] = std::move(rle);

  json contours = json::array();
  for (const auto& c : contours_) {
    json cj;
    cj["kind"] = c.kind == Contour::Kind::RoomBoundary ? "room" : "hole";
    cj["room_id"] = c.room_id;
    json verts = json::array();
    for (const auto& v : c.vertices_px) verts.push_back({static_cast<int>(v.x), static_cast<int>(v.y)});
    cj["vertices_px"] = std::move(verts);
    contours.push_back(std::move(cj));
  }
  j["contours"] = std::move(contours);

  json grid = json::array();
  for (const auto& g : grid_.points) grid.push_back({g.x, g.y});
  j["grid"] = std::move(grid);
  return j.dump();
}

FloorPlanMap FloorPlanMap::from_artifact_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad map artifact: ") + e.what());
  }
  const std::string schema = j.value("schema", "");
  if (schema.rfind("fpbp-map/1", 0) != 0)
    throw FormatError("unsupported map artifact schema: " + schema);

  FloorPlanMap map;
  map.floor_id_ = j.at("floor_id").get<int>();
  map.resolution_r_ = j.at("resolution_r").get<double>();
  map.north_offset_rad_ = j.value("north_offset_rad", 0.0);
  map.width_ = j.at("width_px").get<int>();
  map.height_ = j.at("height_px").get<int>();
  map.room_count_ = j.at("room_count").get<int>();
  map.grid_.interval_m = j.at("grid_interval_m").get<double>();

  map.features_.reserve(static_cast<size_t>(map.width_) * map.height_);
  for (const auto& run : j.at("feature_rle")) {
    const auto cls = static_cast<MapFeature>(run.at(0).get<int>());
    const auto count = run.at(1).get<size_t>();
    map.features_.insert(map.features_.end(), count, cls);
  }
  if (map.features_.size() != static_cast<size_t>(map.width_) * map.height_)
    throw FormatError("map artifact feature field size mismatch");

  for (const auto& cj : j.at("contours")) {
    Contour c;
    c.kind = cj.at("kind").get<std::string>() == "room" ? Contour::Kind::RoomBoundary
                                                        : Contour::Kind::InteriorObstacle;
    c.room_id = cj.at("room_id").get<int>();
    for (const auto& v : cj.at("vertices_px"))
      c.vertices_px.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    map.contours_.push_back(std::move(c));
  }
  for (const auto& g : j.at("grid"))
    map.grid_.points.push_back({g.at(0).get<double>(), g.at(1).get<double>()});

  map.rebuild_caches();
  return map;
}

}  // namespace fpbp
