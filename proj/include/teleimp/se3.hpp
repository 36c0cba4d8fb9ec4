// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#pragma once

#include <span>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace teleimp {

/// Rigid transform stored as position + unit quaternion (w,x,y,z), Hamilton
/// convention. The orientation is renormalized by every constructor and
/// mutator, so a Pose never carries a non-unit quaternion.
class Pose {
 public:
  Pose() = default;
  Pose(const Eigen::Vector3d& position, const Eigen::Quaterniond& orientation);

  static Pose identity() { return {}; }
  static Pose from_translation(double x, double y, double z);
  static Pose from_axis_angle(const Eigen::Vector3d& axis, double angle);
  static Pose from_matrix(const Eigen::Matrix4d& m);

  const Eigen::Vector3d& position() const noexcept { return p_; }
  const Eigen::Quaterniond& orientation() const noexcept { return q_; }

  void set_position(const Eigen::Vector3d& p) { p_ = p; }
  void set_orientation(const Eigen::Quaterniond& q);

  Eigen::Matrix3d rotation() const { return q_.toRotationMatrix(); }
  Eigen::Matrix4d matrix() const;
  Eigen::Vector3d apply(const Eigen::Vector3d& point) const { return p_ + q_ * point; }

  friend bool operator==(const Pose& a, const Pose& b) {
    return a.p_ == b.p_ && a.q_.coeffs() == b.q_.coeffs();
  }

 private:
  Eigen::Vector3d p_ = Eigen::Vector3d::Zero();
  Eigen::Quaterniond q_ = Eigen::Quaterniond::Identity();
};

struct Twist {
  Eigen::Vector3d linear = Eigen::Vector3d::Zero();   // m/s
  Eigen::Vector3d angular = Eigen::Vector3d::Zero();  // rad/s

  bool finite() const { return linear.allFinite() && angular.allFinite(); }
};

struct Wrench {
  Eigen::Vector3d force = Eigen::Vector3d::Zero();   // N
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();  // N m

  bool finite() const { return force.allFinite() && torque.allFinite(); }
  Wrench& operator+=(const Wrench& o) {
    force += o.force;
    torque += o.torque;
    return *this;
  }
};

/// Homogeneous product a * b.
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& t);

/// Reliability-weighted mean of rigid transforms. Weights are normalized to
/// sum 1; positions are averaged linearly and orientations by the
/// hemisphere-aligned chordal quaternion mean. Throws Errc::degenerate_weights
/// when no weight is strictly positive.
Pose weighted_pose_mean(std::span<const Pose> poses, std::span<const double> weights);

/// Axis-angle of desired * current^-1 with the angle wrapped to (-pi, pi].
Eigen::Vector3d orientation_error(const Eigen::Quaterniond& desired,
                                  const Eigen::Quaterniond& current);

/// Smallest rotation angle taking a to b, in [0, pi].
double geodesic_angle(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

/// Rotation vector -> unit quaternion.
Eigen::Quaterniond quat_from_rotvec(const Eigen::Vector3d& rotvec);

}  // namespace teleimp
