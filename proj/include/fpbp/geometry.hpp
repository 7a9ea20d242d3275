#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace fpbp {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  double norm_sq() const { return x * x + y * y; }
  Vec2 normalized() const {
    const double n = norm();
    return n > 0.0 ? Vec2{x / n, y / n} : Vec2{0.0, 0.0};
  }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// z-component of the 2-D cross product (a x b).
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

inline double manhattan_distance(const Vec2& a, const Vec2& b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

// Counterclockwise rotation by phi radians.
inline Vec2 rotate(const Vec2& v, double phi) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  Vec3 normalized() const {
    const double n = norm();
    return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{0.0, 0.0, 0.0};
  }
};

struct Mat3 {
  // Row-major.
  double m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  static Mat3 identity() { return {}; }
  static Mat3 rotation_z(double yaw);

  Vec3 operator*(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }
  Mat3 operator*(const Mat3& o) const;
  Mat3 transposed() const;
};

// Hamilton quaternion, (x, y, z) vector part and scalar w.
struct Quat {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double w = 1.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z + w * w); }
  Quat normalized() const;
};

// Monotone-chain convex hull. Returns the hull in counterclockwise order
// without repeating the first vertex. Collinear inputs collapse to a
// segment (2 points) or a single point.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

// True iff p lies strictly inside the convex polygon `hull` (CCW order).
// Points on the boundary are excluded.
bool point_in_convex_interior(const std::vector<Vec2>& hull, const Vec2& p);

// Even-odd crossing test for arbitrary simple polygons (closed implicitly).
bool point_in_polygon(const std::vector<Vec2>& poly, const Vec2& p);

double polygon_area(const std::vector<Vec2>& poly);  // signed

// Distance from p to segment [a, b]; if closest != nullptr it receives the
// nearest point on the segment.
double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b,
                              Vec2* closest = nullptr);

}  // namespace fpbp
