// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "teleimp/session.hpp"

namespace teleimp {

namespace {

struct Waypoint {
  double t;
  Eigen::Vector3d p;
};

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

Eigen::Vector3d along(const std::vector<Waypoint>& path, double t) {
  if (t <= path.front().t) return path.front().p;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (t <= path[i].t) {
      const double u = smoothstep((t - path[i - 1].t) / (path[i].t - path[i - 1].t));
      return path[i - 1].p + u * (path[i].p - path[i - 1].p);
    }
  }
  return path.back().p;
}

double pressure_for(double k, double k_min, double k_max) { return (k - k_min) / (k_max - k_min); }

}  // namespace

Scenario peg_in_hole_scenario() {
  Scenario s;
  s.session.seed = 7;
  s.tracker.mode = TrackerMode::synthetic;
  s.tracker.noise.pos_sigma = 0.0003;
  s.tracker.noise.rot_sigma = 0.1 * std::numbers::pi / 180.0;
  return s;
}

OperatorScript make_peg_in_hole_script(const Scenario& scenario) {
  const SceneConfig& scene = scenario.scene;
  const ImpedanceProfile& prof = scenario.impedance;
  const double g = scene.gravity;

  // end-effector targets derived from the scene
  const Eigen::Vector3d start = scene.ee_start_pose.position();
  const Eigen::Vector3d grasp = scene.peg_start_pose.apply(scene.grasp_point);
  const double ee_above_bottom = scene.grasp_point.z() + 0.5 * scene.peg_dims.z();
  const Eigen::Vector3d mouth = scene.hole_pose.position();
  const double travel_z = mouth.z() + ee_above_bottom + 0.125;

  const double k_align = 400.0;
  const double sag_align = scene.peg_mass * g / k_align;
  const double sag_stiff = scene.peg_mass * g / prof.k_t_max;
  const double entry_depth = 0.005;
  const double final_depth = 0.125;

  const Eigen::Vector3d above_peg = grasp + Eigen::Vector3d(0, 0, 0.075);
  const Eigen::Vector3d lifted{grasp.x(), grasp.y(), travel_z};
  const Eigen::Vector3d midway{0.5 * (grasp.x() + mouth.x()), 0.5 * (grasp.y() + mouth.y()), travel_z};
  const Eigen::Vector3d over_hole{mouth.x(), mouth.y(), travel_z};
  const Eigen::Vector3d entry{mouth.x(), mouth.y(), mouth.z() - entry_depth + ee_above_bottom + sag_align};
  const Eigen::Vector3d seated{mouth.x(), mouth.y(), mouth.z() - final_depth + ee_above_bottom + sag_stiff};

  // times (s)
  const double t_engage = 0.1, t_grip = 4.5, t_stiff = 4.6;
  const double t_release = 7.3, t_reengage = 8.1, t_soften = 8.2, t_insert = 11.3, t_end = 16.0;

  const std::vector<Waypoint> goal_path{
      {0.3, start},     {2.3, above_peg}, {3.3, grasp},     {5.0, grasp},   {6.2, lifted},
      {7.2, midway},    {8.2, midway},    {9.7, over_hole}, {11.2, entry},  {11.3, entry},
      {13.3, seated},
  };

  // the handle starts at the interface origin; the clutch is re-indexed
  // once mid-transport to bring it back toward the camera axis
  Eigen::Vector3d offset_before = start;  // goal - leader while engaged
  Eigen::Vector3d leader_at_release = midway - offset_before;
  Eigen::Vector3d leader_at_reengage{0.0, 0.0, leader_at_release.z()};
  Eigen::Vector3d offset_after = midway - leader_at_reengage;

  std::vector<ScriptEntry> entries;
  auto push = [&](double t, wire::ClientMessage m) { entries.push_back({t, std::move(m)}); };

  const double period = 0.02;  // 50 Hz operator stream
  const auto n = static_cast<int>(std::lround(t_end / period));
  push(0.0, wire::Fsr{0.0, 0.0, 1.0});
  for (int i = 0; i <= n; ++i) {
    const double t = i * period;
    Eigen::Vector3d leader;
    if (t < t_release) {
      leader = along(goal_path, t) - offset_before;
    } else if (t < t_reengage) {
      const double u = smoothstep((t - t_release - 0.1) / (t_reengage - t_release - 0.2));
      leader = leader_at_release + u * (leader_at_reengage - leader_at_release);
    } else {
      leader = along(goal_path, t) - offset_after;
    }
    push(t, wire::PoseSample{t, Pose(leader, Eigen::Quaterniond::Identity())});
  }
  push(t_engage, wire::TeleopToggle{});
  push(t_grip, wire::GripperToggle{});
  push(t_stiff, wire::Fsr{t_stiff, 1.0, 1.0});
  push(t_release, wire::TeleopToggle{});
  push(t_reengage, wire::TeleopToggle{});
  push(t_soften, wire::Fsr{t_soften, pressure_for(k_align, prof.k_t_min, prof.k_t_max), 0.0});
  push(t_insert, wire::Fsr{t_insert, 1.0, 0.0});
  // samples first among equal timestamps
  std::stable_sort(entries.begin(), entries.end(),
                   [](const ScriptEntry& a, const ScriptEntry& b) { return a.t < b.t; });
  return OperatorScript{std::move(entries)};
}

}  // namespace teleimp
