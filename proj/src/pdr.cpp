#include "fpbp/pdr.hpp"

#include <algorithm>
#include <cmath>

#include "fpbp/errors.hpp"

namespace fpbp {

Mat3 quat_to_rotmat(const Quat& q_in) {
  const double n = q_in.norm();
  if (n < 1e-12) throw ZeroQuaternionError("zero quaternion has no rotation");
  const Quat q = {q_in.x / n, q_in.y / n, q_in.z / n, q_in.w / n};
  Mat3 r;
  r.m[0][0] = 1.0 - 2.0 * (q.y * q.y + q.z * q.z);
  r.m[0][1] = 2.0 * (q.x * q.y - q.z * q.w);
  r.m[0][2] = 2.0 * (q.x * q.z + q.y * q.w);
  r.m[1][0] = 2.0 * (q.x * q.y + q.z * q.w);
  r.m[1][1] = 1.0 - 2.0 * (q.x * q.x + q.z * q.z);
  r.m[1][2] = 2.0 * (q.y * q.z - q.x * q.w);
  r.m[2][0] = 2.0 * (q.x * q.z - q.y * q.w);
  r.m[2][1] = 2.0 * (q.y * q.z + q.x * q.w);
  r.m[2][2] = 1.0 - 2.0 * (q.x * q.x + q.y * q.y);
  return r;
}

std::optional<StepDetection> StepDetector::push(double z) {
  const int64_t k = next_index_++;
  window_.push_back(z);
  const size_t size = static_cast<size_t>(2 * cfg_.half_window + 1);
  if (window_.size() > size) window_.pop_front();
  if (window_.size() < size) return std::nullopt;

  const double center = window_[cfg_.half_window];
  const int64_t center_index = k - cfg_.half_window;
  double max_v = -std::numeric_limits<double>::infinity();
  double min_v = std::numeric_limits<double>::infinity();
  for (double v : window_) {
    max_v = std::max(max_v, v);
    min_v = std::min(min_v, v);
  }
  if (center < max_v) return std::nullopt;
  if (center <= cfg_.z_threshold) return std::nullopt;
  if (center_index - last_step_index_ <= cfg_.k_threshold) return std::nullopt;

  last_step_index_ = center_index;
  return StepDetection{center_index, center - min_v};
}

namespace {

inline Quat quat_multiply(const Quat& a, const Quat& b) {
  return {a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
          a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z};
}

// ENU <-> magnetic-x earth frame of the Madgwick formulation.
inline Quat enu_to_mag_frame(const Quat& q_enu) {
  const Quat qz{0.0, 0.0, std::sin(-M_PI / 4.0), std::cos(-M_PI / 4.0)};
  return quat_multiply(qz, q_enu);
}
inline Quat mag_frame_to_enu(const Quat& q_mag) {
  const Quat qz{0.0, 0.0, std::sin(M_PI / 4.0), std::cos(M_PI / 4.0)};
  return quat_multiply(qz, q_mag);
}

}  // namespace

void MadgwickFilter::update(const Vec3& gyro, const Vec3& accel, const Vec3& mag, double dt) {
  const double q1 = q_.w, q2 = q_.x, q3 = q_.y, q4 = q_.z;

  // Rate of change from the gyroscope.
  Quat q_dot = quat_multiply(q_, {0.5 * gyro.x, 0.5 * gyro.y, 0.5 * gyro.z, 0.0});

  const double a_norm = accel.norm();
  if (a_norm > 1e-9) {
    const Vec3 a = accel * (1.0 / a_norm);
    double s1, s2, s3, s4;
    const double m_norm = mag.norm();
    if (m_norm > 1e-9) {
      // MARG gradient step (accelerometer + magnetometer objective).
      const Vec3 m = mag * (1.0 / m_norm);
      const double _2q1mx = 2.0 * q1 * m.x;
      const double _2q1my = 2.0 * q1 * m.y;
      const double _2q1mz = 2.0 * q1 * m.z;
      const double _2q2mx = 2.0 * q2 * m.x;
      const double hx = m.x * q1 * q1 - _2q1my * q4 + _2q1mz * q3 + m.x * q2 * q2 +
                        2.0 * q2 * m.y * q3 + 2.0 * q2 * m.z * q4 - m.x * q3 * q3 - m.x * q4 * q4;
      const double hy = _2q1mx * q4 + m.y * q1 * q1 - _2q1mz * q2 + _2q2mx * q3 - m.y * q2 * q2 +
                        m.y * q3 * q3 + 2.0 * q3 * m.z * q4 - m.y * q4 * q4;
      const double _2bx = std::sqrt(hx * hx + hy * hy);
      const double _2bz = -_2q1mx * q3 + _2q1my * q2 + m.z * q1 * q1 + _2q2mx * q4 -
                          m.z * q2 * q2 + 2.0 * q3 * m.y * q4 - m.z * q3 * q3 + m.z * q4 * q4;
      const double _4bx = 2.0 * _2bx;
      const double _4bz = 2.0 * _2bz;

      s1 = -2.0 * q3 * (2.0 * q2 * q4 - 2.0 * q1 * q3 - a.x) +
           2.0 * q2 * (2.0 * q1 * q2 + 2.0 * q3 * q4 - a.y) -
           _2bz * q3 * (_2bx * (0.5 - q3 * q3 - q4 * q4) + _2bz * (q2 * q4 - q1 * q3) - m.x) +
           (-_2bx * q4 + _2bz * q2) *
               (_2bx * (q2 * q3 - q1 * q4) + _2bz * (q1 * q2 + q3 * q4) - m.y) +
           _2bx * q3 * (_2bx * (q1 * q3 + q2 * q4) + _2bz * (0.5 - q2 * q2 - q3 * q3) - m.z);
      s2 = 2.0 * q4 * (2.0 * q2 * q4 - 2.0 * q1 * q3 - a.x) +
           2.0 * q1 * (2.0 * q1 * q2 + 2.0 * q3 * q4 - a.y) -
           4.0 * q2 * (1.0 - 2.0 * q2 * q2 - 2.0 * q3 * q3 - a.z) +
           _2bz * q4 * (_2bx * (0.5 - q3 * q3 - q4 * q4) + _2bz * (q2 * q4 - q1 * q3) - m.x) +
           (_2bx * q3 + _2bz * q1) *
               (_2bx * (q2 * q3 - q1 * q4) + _2bz * (q1 * q2 + q3 * q4) - m.y) +
           (_2bx * q4 - _4bz * q2) *
               (_2bx * (q1 * q3 + q2 * q4) + _2bz * (0.5 - q2 * q2 - q3 * q3) - m.z);
      s3 = -2.0 * q1 * (2.0 * q2 * q4 - 2.0 * q1 * q3 - a.x) +
           2.0 * q4 * (2.0 * q1 * q2 + 2.0 * q3 * q4 - a.y) -
           4.0 * q3 * (1.0 - 2.0 * q2 * q2 - 2.0 * q3 * q3 - a.z) +
           (-_4bx * q3 - _2bz * q1) *
               (_2bx * (0.5 - q3 * q3 - q4 * q4) + _2bz * (q2 * q4 - q1 * q3) - m.x) +
           (_2bx * q2 + _2bz * q4) *
               (_2bx * (q2 * q3 - q1 * q4) + _2bz * (q1 * q2 + q3 * q4) - m.y) +
           (_2bx * q1 - _4bz * q3) *
               (_2bx * (q1 * q3 + q2 * q4) + _2bz * (0.5 - q2 * q2 - q3 * q3) - m.z);
      s4 = 2.0 * q2 * (2.0 * q2 * q4 - 2.0 * q1 * q3 - a.x) +
           2.0 * q3 * (2.0 * q1 * q2 + 2.0 * q3 * q4 - a.y) +
           (-_4bx * q4 + _2bz * q2) *
               (_2bx * (0.5 - q3 * q3 - q4 * q4) + _2bz * (q2 * q4 - q1 * q3) - m.x) +
           (-_2bx * q1 + _2bz * q3) *
               (_2bx * (q2 * q3 - q1 * q4) + _2bz * (q1 * q2 + q3 * q4) - m.y) +
           _2bx * q2 * (_2bx * (q1 * q3 + q2 * q4) + _2bz * (0.5 - q2 * q2 - q3 * q3) - m.z);
    } else {
      // IMU-only gradient step.
      const double _4q1 = 4.0 * q1, _4q2 = 4.0 * q2, _4q3 = 4.0 * q3;
      const double _8q2 = 8.0 * q2, _8q3 = 8.0 * q3;
      const double q1q1 = q1 * q1, q2q2 = q2 * q2, q3q3 = q3 * q3, q4q4 = q4 * q4;
      s1 = _4q1 * q3q3 + 2.0 * q3 * a.x + _4q1 * q2q2 - 2.0 * q2 * a.y;
      s2 = _4q2 * q4q4 - 2.0 * q4 * a.x + 4.0 * q1q1 * q2 - 2.0 * q1 * a.y - _4q2 +
           _8q2 * q2q2 + _8q2 * q3q3 + _4q2 * a.z;
      s3 = 4.0 * q1q1 * q3 + 2.0 * q1 * a.x + _4q3 * q4q4 - 2.0 * q4 * a.y - _4q3 +
           _8q3 * q2q2 + _8q3 * q3q3 + _4q3 * a.z;
      s4 = 4.0 * q2q2 * q4 - 2.0 * q2 * a.x + 4.0 * q3q3 * q4 - 2.0 * q3 * a.y;
    }
    const double s_norm = std::sqrt(s1 * s1 + s2 * s2 + s3 * s3 + s4 * s4);
    if (s_norm > 1e-12) {
      q_dot.w -= gain_ * s1 / s_norm;
      q_dot.x -= gain_ * s2 / s_norm;
      q_dot.y -= gain_ * s3 / s_norm;
      q_dot.z -= gain_ * s4 / s_norm;
    }
  }

  q_.w += q_dot.w * dt;
  q_.x += q_dot.x * dt;
  q_.y += q_dot.y * dt;
  q_.z += q_dot.z * dt;
  q_ = q_.normalized();
}

OrientationTracker::OrientationTracker(const OrientationConfig& config)
    : cfg_(config), filter_(config.madgwick_gain), r_e_(Mat3::rotation_z(config.north_offset_rad)) {}

void OrientationTracker::update(const ImuSample& sample, double dt) {
  ++sample_count_;
  if (sample.rotation) device_quat_ = *sample.rotation;
  if (sample_count_ <= cfg_.warmup_samples) {
    // Warmup: trust the device quaternion and keep seeding the filter so it
    // starts anchored at the device attitude.
    filter_.reset(enu_to_mag_frame(device_quat_));
    return;
  }
  const Vec3 gyro = sample.gyro.value_or(Vec3{});
  const Vec3 accel = sample.accel_gravity.value_or(Vec3{});
  const Vec3 mag = sample.mag.value_or(Vec3{});
  filter_.update(gyro, accel, mag, dt);
}

Quat OrientationTracker::device_to_enu() const {
  return warmed_up() ? mag_frame_to_enu(filter_.quaternion()) : device_quat_;
}

Mat3 OrientationTracker::device_to_map() const { return r_e_ * quat_to_rotmat(device_to_enu()); }

double step_heading(const Mat3& device_to_map) {
  const Vec3 dir = device_to_map * Vec3{0.0, 1.0, 0.0};
  const double norm = std::hypot(dir.x, dir.y);
  if (norm < 1e-6)
    throw VerticalDegenerateError("device +y axis has no horizontal projection");
  return std::atan2(dir.y / norm, dir.x / norm);
}

}  // namespace fpbp
