// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include "teleimp/teleop.hpp"

#include <algorithm>
#include <cmath>

#include "teleimp/error.hpp"

namespace teleimp {

void ScaleFactor::set(double s) {
  if (std::isnan(s)) throw Error(Errc::domain, "scale factor is NaN");
  s_ = std::clamp(s, kMin, kMax);
}

ClutchState engage(const Pose& leader_now, const Pose& follower_now, bool leader_stale) {
  if (leader_stale) throw Error(Errc::stale_pose, "cannot engage teleoperation on a stale leader pose");
  return ClutchState{true, leader_now, follower_now};
}

ClutchState disengage(ClutchState state) {
  state.engaged = false;
  return state;
}

std::optional<Pose> map_leader_to_goal(const Pose& leader_now, const ClutchState& state,
                                       const ScaleFactor& scale, const Eigen::Quaterniond& r_offset) {
  if (!state.engaged) return std::nullopt;
  const Eigen::Vector3d leader_delta = leader_now.position() - state.leader_anchor.position();
  const Eigen::Vector3d position =
      state.follower_anchor.position() + scale.value() * (r_offset * leader_delta);

  // leader rotation since the anchor, in the leader world frame, re-expressed
  // in the follower world frame
  const Eigen::Quaterniond leader_rot =
      leader_now.orientation() * state.leader_anchor.orientation().conjugate();
  const Eigen::Quaterniond follower_rot = r_offset * leader_rot * r_offset.conjugate();
  return Pose(position, follower_rot * state.follower_anchor.orientation());
}

GripperState gripper_toggle(GripperState current) noexcept {
  return current == GripperState::open ? GripperState::closed : GripperState::open;
}

HapticCue vibro_amplitude(const Wrench& external, double f_sat) {
  if (!(f_sat > 0.0)) throw Error(Errc::domain, "f_sat must be positive");
  return HapticCue{std::min(1.0, external.force.norm() / f_sat)};
}

}  // namespace teleimp
