// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#pragma once

#include <optional>

#include "teleimp/se3.hpp"

namespace teleimp {

struct ClutchState {
  bool engaged = false;
  Pose leader_anchor;
  Pose follower_anchor;
};

/// Leader-to-follower translation scale, clamped to [0.1, 2.0].
class ScaleFactor {
 public:
  static constexpr double kMin = 0.1;
  static constexpr double kMax = 2.0;

  ScaleFactor() = default;
  explicit ScaleFactor(double s) { set(s); }

  void set(double s);
  double value() const noexcept { return s_; }

 private:
  double s_ = 1.0;
};

struct HapticCue {
  double amplitude = 0.0;  // [0,1]
};

enum class GripperState { open, closed };

/// Re-anchors the clutch at the current leader and follower poses so the
/// first mapped goal equals follower_now. Throws Errc::stale_pose when the
/// leader pose is stale.
ClutchState engage(const Pose& leader_now, const Pose& follower_now, bool leader_stale);
ClutchState disengage(ClutchState state);

/// Engaged: follower_anchor displaced by s * R_offset * (leader translation)
/// and rotated by the (unscaled) leader rotation since the anchor. Disengaged:
/// nullopt, i.e. the follower goal stays frozen.
std::optional<Pose> map_leader_to_goal(const Pose& leader_now, const ClutchState& state,
                                       const ScaleFactor& scale,
                                       const Eigen::Quaterniond& r_offset = Eigen::Quaterniond::Identity());

GripperState gripper_toggle(GripperState current) noexcept;

/// min(1, |force| / f_sat). Torque is ignored.
HapticCue vibro_amplitude(const Wrench& external, double f_sat);

}  // namespace teleimp
