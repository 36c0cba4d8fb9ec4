// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include "teleimp/se3.hpp"

#include <cmath>
#include <limits>

#include "teleimp/error.hpp"

namespace teleimp {

namespace {

Eigen::Quaterniond normalized_or_throw(const Eigen::Quaterniond& q) {
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(Errc::domain, "quaternion has zero or non-finite norm");
  }
  // already unit to rounding: leave the bits alone so serialized poses
  // re-parse to identical values
  if (std::abs(n - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) return q;
  return Eigen::Quaterniond(q.coeffs() / n);
}

}  // namespace

Pose::Pose(const Eigen::Vector3d& position, const Eigen::Quaterniond& orientation)
    : p_(position), q_(normalized_or_throw(orientation)) {}

Pose Pose::from_translation(double x, double y, double z) {
  Pose t;
  t.p_ = Eigen::Vector3d(x, y, z);
  return t;
}

Pose Pose::from_axis_angle(const Eigen::Vector3d& axis, double angle) {
  return Pose(Eigen::Vector3d::Zero(), Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())));
}

Pose Pose::from_matrix(const Eigen::Matrix4d& m) {
  const Eigen::Matrix3d r = m.block<3, 3>(0, 0);
  return Pose(m.block<3, 1>(0, 3), Eigen::Quaterniond(r));
}

void Pose::set_orientation(const Eigen::Quaterniond& q) { q_ = normalized_or_throw(q); }

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 3>(0, 0) = rotation();
  m.block<3, 1>(0, 3) = p_;
  return m;
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.position() + a.orientation() * b.position(), a.orientation() * b.orientation());
}

Pose invert(const Pose& t) {
  const Eigen::Quaterniond qi = t.orientation().conjugate();
  return Pose(-(qi * t.position()), qi);
}

Pose weighted_pose_mean(std::span<const Pose> poses, std::span<const double> weights) {
  if (poses.empty() || poses.size() != weights.size()) {
    throw Error(Errc::domain, "weighted_pose_mean needs equal, non-empty pose and weight lists");
  }
  double total = 0.0;
  std::size_t ref = poses.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0 || !std::isfinite(weights[i])) {
      throw Error(Errc::domain, "weights must be finite and non-negative");
    }
    if (weights[i] > 0.0 && ref == poses.size()) ref = i;
    total += weights[i];
  }
  if (ref == poses.size() || !(total > 0.0)) {
    throw Error(Errc::degenerate_weights, "all weights are zero");
  }

  const Eigen::Vector4d q_ref = poses[ref].orientation().coeffs();
  Eigen::Vector3d p_sum = Eigen::Vector3d::Zero();
  Eigen::Vector4d q_sum = Eigen::Vector4d::Zero();
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const double w = weights[i] / total;
    p_sum += w * poses[i].position();
    const Eigen::Vector4d q = poses[i].orientation().coeffs();
    q_sum += (q.dot(q_ref) < 0.0 ? -w : w) * q;
  }
  return Pose(p_sum, Eigen::Quaterniond(q_sum));
}

Eigen::Vector3d orientation_error(const Eigen::Quaterniond& desired,
                                  const Eigen::Quaterniond& current) {
  Eigen::Quaterniond e = desired * current.conjugate();
  if (e.w() < 0.0) e.coeffs() = -e.coeffs();
  const double s = e.vec().norm();
  if (s == 0.0) return Eigen::Vector3d::Zero();
  const double angle = 2.0 * std::atan2(s, e.w());
  return e.vec() * (angle / s);
}

double geodesic_angle(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  const Eigen::Quaterniond e = a.conjugate() * b;
  return 2.0 * std::atan2(e.vec().norm(), std::abs(e.w()));
}

Eigen::Quaterniond quat_from_rotvec(const Eigen::Vector3d& rotvec) {
  const double angle = rotvec.norm();
  if (angle < 1e-12) {
    // second-order accurate near zero; normalized on return
    Eigen::Quaterniond q(1.0, 0.5 * rotvec.x(), 0.5 * rotvec.y(), 0.5 * rotvec.z());
    return q.normalized();
  }
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, rotvec / angle));
}

}  // namespace teleimp
