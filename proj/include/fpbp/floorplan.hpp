#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fpbp/geometry.hpp"
#include "fpbp/image.hpp"

namespace fpbp {

// Map feature classes and their scalar values M(x). FTA is the floor
// transition area (elevator/stairwell).
enum class MapFeature : uint8_t { Walkable = 0, Fta = 1, Door = 2, Wall = 3 };

inline double feature_value(MapFeature f) {
  switch (f) {
    case MapFeature::Walkable:
      return 0.0;
    case MapFeature::Fta:
      return 0.25;
    case MapFeature::Door:
      return 0.5;
    case MapFeature::Wall:
      return 1.0;
  }
  return 1.0;
}

// Obstacle thresholds for feasibility queries: a point blocks when
// M(x) > threshold.
//   kObstacleAny  — anything non-walkable blocks (FTA included)
//   kPassFta      — FTA passable; doors and walls block (movement checks)
//   kWallOnly     — only walls block (ground truth may cross doors)
constexpr double kObstacleAny = 0.0;
constexpr double kPassFta = 0.25;
constexpr double kWallOnly = 0.5;

struct Palette {
  Rgb walkable{255, 255, 255};
  Rgb wall{0, 0, 0};
  Rgb door{255, 0, 0};
  Rgb fta{0, 0, 255};

  std::optional<MapFeature> classify(const Rgb& c) const;
  Rgb color_of(MapFeature f) const;
};

// A stylized floor plan: every pixel carries exactly one palette color.
// Anti-aliased inputs are rejected during classification.
struct StylizedRaster {
  ImageRgb image;
  Palette palette;
};

struct Contour {
  enum class Kind { RoomBoundary, InteriorObstacle };
  Kind kind = Kind::RoomBoundary;
  int room_id = -1;
  // Closed polygon in image coordinates; vertices are pixel corners
  // (integer-valued), the last vertex is implicitly joined to the first.
  std::vector<Vec2> vertices_px;
};

struct GridArray {
  double interval_m = 0.3;
  std::vector<Vec2> points;  // map coordinates, all on Walkable pixels
};

// Immutable compiled map. Thread-safe for concurrent readers.
class FloorPlanMap {
 public:
  FloorPlanMap() = default;

  int width_px() const { return width_; }
  int height_px() const { return height_; }
  double resolution() const { return resolution_r_; }
  int floor_id() const { return floor_id_; }
  double north_offset_rad() const { return north_offset_rad_; }
  double extent_x_m() const { return width_ / resolution_r_; }
  double extent_y_m() const { return height_ / resolution_r_; }

  // Eq.-style coordinate transforms between image (ICS, y down) and map
  // (MCS, y up) frames: x = x_I / r, y = (H_I - y_I) / r.
  Vec2 ics_to_mcs(const Vec2& p_ics) const {
    return {p_ics.x / resolution_r_, (height_ - p_ics.y) / resolution_r_};
  }
  Vec2 mcs_to_ics(const Vec2& p_mcs) const {
    return {p_mcs.x * resolution_r_, height_ - p_mcs.y * resolution_r_};
  }

  bool in_bounds_ics(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }
  MapFeature feature_px(int x, int y) const {
    return features_[static_cast<size_t>(y) * width_ + x];
  }
  // Pixel lookups outside the raster count as Wall.
  MapFeature feature_px_clamped(int x, int y) const {
    return in_bounds_ics(x, y) ? feature_px(x, y) : MapFeature::Wall;
  }

  // Feature of the pixel containing p. Throws OutOfBoundsError outside the
  // raster extent.
  MapFeature feature_at(const Vec2& p_mcs) const;
  // Scalar map function M(x); out-of-extent points count as Wall (1.0).
  double value_at(const Vec2& p_mcs) const;
  bool contains(const Vec2& p_mcs) const;

  // Unit normal of the obstacle boundary near p, oriented from the obstacle
  // toward the walkable side. Throws ZeroGradientError away from boundaries.
  Vec2 surface_normal_at(const Vec2& p_mcs) const;

  // Id of the room (RoomBoundary contour) containing p via point-in-polygon;
  // nullopt for obstacle points or points outside every room.
  std::optional<int> room_of(const Vec2& p_mcs) const;

  // Closest point on any contour (edges included) in map coordinates.
  // Ties break toward the lowest contour id, then the lowest vertex index.
  // `contour_filter`, when non-empty, restricts the search to those ids.
  Vec2 closest_contour_point(const Vec2& p_mcs,
                             const std::vector<int>* contour_filter = nullptr) const;

  const std::vector<Contour>& contours() const { return contours_; }
  const GridArray& grid() const { return grid_; }
  int room_count() const { return room_count_; }

  // Ids of rooms whose boundary touches the connected door region containing
  // the given door pixel; empty if the pixel is not a door.
  std::vector<int> rooms_adjacent_to_door(const Vec2& p_mcs) const;

  // Boundary segments between the door region containing p and the free
  // pixels of the given room; empty when p is not on a door or the room does
  // not border it. `inward` points from the door into the room.
  struct InterfaceEdge {
    Vec2 a;
    Vec2 b;
    Vec2 inward;
  };
  std::vector<InterfaceEdge> door_room_interface(const Vec2& p_mcs, int room_id) const;

  std::string to_artifact_json() const;                       // versioned container
  static FloorPlanMap from_artifact_json(const std::string&);  // rejects unknown majors

 private:
  friend FloorPlanMap compile_map(const StylizedRaster&, double, double, int, double);

  int width_ = 0;
  int height_ = 0;
  double resolution_r_ = 1.0;
  double north_offset_rad_ = 0.0;
  int floor_id_ = 0;
  int room_count_ = 0;
  std::vector<MapFeature> features_;
  std::vector<Contour> contours_;
  std::vector<std::vector<Vec2>> contours_mcs_;  // cached MCS polygons
  GridArray grid_;

  void rebuild_caches();
};

// Compiles a stylized raster into a queryable map. Pure function of its
// inputs: identical inputs produce identical artifacts.
// Throws UnknownColorError, DegenerateMapError, ConfigError.
FloorPlanMap compile_map(const StylizedRaster& raster, double resolution_r, double interval_m,
                         int floor_id, double north_offset_rad = 0.0);

}  // namespace fpbp
