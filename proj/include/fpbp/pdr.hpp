#pragma once

#include <cstdint>
#include <deque>
#include <optional>

#include "fpbp/geometry.hpp"

namespace fpbp {

struct ImuSample {
  int64_t t_ms = 0;
  std::optional<Vec3> accel_linear;   // gravity-free, device frame (m/s^2)
  std::optional<Vec3> accel_gravity;  // gravity-inclusive, device frame
  std::optional<Vec3> gyro;           // rad/s, device frame
  std::optional<Vec3> mag;            // uT, device frame
  std::optional<Quat> rotation;       // device -> east-north-up
};

// Rotation matrix of a unit quaternion (renormalized internally).
// Throws ZeroQuaternionError for a zero quaternion.
Mat3 quat_to_rotmat(const Quat& q);

// Vertical component of the device acceleration once rotated into the map
// frame: (R_D * a_dcs).z.
inline double vertical_accel(const Vec3& accel_dcs, const Mat3& device_to_map) {
  return (device_to_map * accel_dcs).z;
}

struct StepDetectorConfig {
  int half_window = 15;     // h: peak confirmation lag in samples
  double z_threshold = 1.0;  // m/s^2
  int k_threshold = 18;      // minimum samples between steps
};

struct StepDetection {
  int64_t sample_index = 0;  // index of the peak (k - h)
  double z_pp = 0.0;         // peak-to-peak acceleration in the window
};

// Streaming peak detector over the vertical acceleration sequence. A step
// fires at index k-h when that sample is the maximum of the 2h+1 window,
// exceeds z_threshold, and lies more than k_threshold samples after the
// previous step.
class StepDetector {
 public:
  explicit StepDetector(const StepDetectorConfig& config = {}) : cfg_(config) {}

  std::optional<StepDetection> push(double z);

  int64_t sample_count() const { return next_index_; }

 private:
  StepDetectorConfig cfg_;
  std::deque<double> window_;
  int64_t next_index_ = 0;
  int64_t last_step_index_ = std::numeric_limits<int64_t>::min() / 2;
};

// Weinberg step length: beta * z_pp^(1/4).
inline double weinberg_step_length(double z_pp, double beta) {
  return beta * std::pow(z_pp, 0.25);
}

// Gradient-descent AHRS after Madgwick (2011): gyro integration with an
// accelerometer + magnetometer correction step scaled by `gain`. The earth
// frame of this formulation carries the magnetic horizontal along +x.
class MadgwickFilter {
 public:
  explicit MadgwickFilter(double gain = 0.1) : gain_(gain) {}

  void reset(const Quat& q) { q_ = q.normalized(); }
  const Quat& quaternion() const { return q_; }

  // gyro rad/s, accel gravity-inclusive (any magnitude), mag in uT. Zero
  // accel or mag vectors skip the respective correction.
  void update(const Vec3& gyro, const Vec3& accel, const Vec3& mag, double dt);

 private:
  double gain_;
  Quat q_{0, 0, 0, 1};
};

struct OrientationConfig {
  int warmup_samples = 120;   // k0: pass device quaternions through until here
  double madgwick_gain = 0.1;
  double north_offset_rad = 0.0;  // yaw of R_E (east-north-up -> map)
};

// Tracks the device -> map rotation. During warmup the device-supplied
// quaternion (device -> east-north-up) is used directly; afterwards the
// Madgwick filter, seeded from the device attitude at the boundary, takes
// over. The filter's magnetic-north-along-x earth frame differs from ENU by
// a fixed 90-degree z-rotation, applied at this boundary.
class OrientationTracker {
 public:
  explicit OrientationTracker(const OrientationConfig& config = {});

  void update(const ImuSample& sample, double dt);

  Mat3 device_to_map() const;  // R_D = R_E * R_D^E
  Quat device_to_enu() const;
  bool warmed_up() const { return sample_count_ > cfg_.warmup_samples; }

 private:
  OrientationConfig cfg_;
  MadgwickFilter filter_;
  Mat3 r_e_;
  Quat device_quat_{0, 0, 0, 1};
  int64_t sample_count_ = 0;
};

// Heading of the device +y axis in the map frame: atan2 of the normalized
// horizontal projection of R_D * (0,1,0). Throws VerticalDegenerateError
// when the projection vanishes (device pointing straight up/down).
double step_heading(const Mat3& device_to_map);

}  // namespace fpbp
