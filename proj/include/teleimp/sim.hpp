// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "teleimp/impedance.hpp"
#include "teleimp/json_io.hpp"
#include "teleimp/se3.hpp"
#include "teleimp/teleop.hpp"

namespace teleimp {

/// Peg-in-hole scene. The hole frame sits at the center of the mouth, z up;
/// the cavity extends `hole_inner.z()` below it. The fixture (four walls and
/// a floor slab of thickness `hole_wall`) replaces the table inside its
/// footprint.
struct SceneConfig {
  Eigen::Vector3d peg_dims{0.050, 0.050, 0.150};    // m, box, z = long axis
  Eigen::Vector3d hole_inner{0.056, 0.056, 0.150};  // m
  double hole_wall = 0.030;                         // m
  double peg_mass = 0.5;                            // kg
  Pose hole_pose = Pose::from_translation(0.5, 0.3, 0.150);
  Pose peg_start_pose = Pose::from_translation(0.5, 0.0, 0.075);
  double table_height = 0.0;  // m, world z

  double contact_stiffness = 1.0e4;  // N/m
  double contact_damping = 50.0;     // N s/m
  double friction_mu = 0.4;
  double slip_velocity = 0.01;  // m/s, friction smoothing scale
  double gravity = 9.81;        // m/s^2

  double ee_mass = 2.0;          // kg
  double ee_rot_inertia = 0.02;  // kg m^2, isotropic
  Pose ee_start_pose = Pose::from_translation(0.5, -0.15, 0.35);
  double grasp_radius = 0.02;                              // m
  Eigen::Vector3d grasp_point{0.0, 0.0, 0.050};            // peg frame
  double wrench_noise_sigma = 0.0;                         // N, N m
  double dt = 0.001;                                       // s

  /// Throws Errc::config on inconsistent geometry or non-positive constants.
  void validate() const;
  double half_clearance() const;
};

struct BodyState {
  Pose pose;
  Twist twist;
  double mass = 1.0;         // kg
  double rot_inertia = 1.0;  // kg m^2 (isotropic; the peg uses its box tensor)
};

enum class Phase { reach, transport, align, insert, done };
std::string_view to_string(Phase phase) noexcept;
Phase phase_from_string(std::string_view s);

struct EpisodeStatus {
  Phase phase = Phase::reach;
  bool success = false;
  double t = 0.0;
  double depth = 0.0;           // m, peg bottom below the mouth plane
  double lateral_offset = 0.0;  // m, peg center off the hole axis, per-axis max
  double axis_angle = 0.0;      // rad, peg axis vs hole axis
  double distance_to_mouth = 0.0;
  bool consistent = true;  // false when the pose cannot occur under rigid contact
};

/// Action applied during one step.
struct SimCommand {
  Pose goal;
  ImpedanceCommand impedance;
  GripperState gripper = GripperState::open;
};

struct World {
  SceneConfig scene;
  BodyState ee;
  BodyState peg;
  GripperState gripper = GripperState::open;
  bool grasped = false;
  Pose grasp_offset;  // ee -> peg while grasped
  std::uint64_t step_index = 0;
  double t = 0.0;
  std::uint64_t seed = 0;
};

World make_world(const SceneConfig& scene, std::uint64_t seed);

struct ContactPoint {
  Eigen::Vector3d position;  // world
  Eigen::Vector3d normal;    // world, pointing out of the obstacle
  double depth = 0.0;
  Eigen::Vector3d force;  // world, applied to the peg
};

struct ContactResult {
  Wrench wrench;  // world frame, torque about the peg origin
  std::vector<ContactPoint> points;
};

/// Cartesian spring-damper pulling the end-effector to the goal.
Wrench impedance_wrench(const Pose& goal, const BodyState& ee, const ImpedanceCommand& impedance);

/// Penalty contact of the 8 peg corners against the table, the hole walls
/// and the hole floor.
ContactResult contact_wrench(const BodyState& peg, const SceneConfig& scene);

/// Semi-implicit Euler step. Throws Errc::sim_diverged naming the first
/// non-finite quantity.
void step_in_place(World& world, const SimCommand& cmd, double dt);
World step(World world, const SimCommand& cmd, double dt);

/// Contact plus uncompensated payload wrench seen at the end-effector
/// (world frame, torque about the end-effector origin), plus optional noise.
Wrench estimate_external_wrench(const World& world);

EpisodeStatus check_success(const World& world);

/// Episode-header snapshot of the mutable world state.
void write_world_state(JsonWriter& w, const World& world);
void read_world_state(const Json& doc, World& world);

}  // namespace teleimp
