// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "teleimp/impedance.hpp"
#include "teleimp/marker_tracker.hpp"
#include "teleimp/sim.hpp"

namespace teleimp {

enum class TrackerMode {
  direct,     // pose samples are the leader pose
  synthetic,  // pose samples are the true interface pose, seen through the marker tracker
};

/// Default camera: 0.6 m in front of the interface origin along +x at the
/// height of the marker cube, optical axis looking back along -x.
Pose default_camera_pose();

struct TrackerSetup {
  TrackerMode mode = TrackerMode::synthetic;
  TrackerConfig config{default_camera_pose()};
  NoiseSpec noise;
  double cube_edge = 0.060;
  double stem = 0.110;
};

struct TeleopConfig {
  double scale = 1.0;
  double f_sat = 30.0;  // N
  Eigen::Quaterniond r_offset = Eigen::Quaterniond::Identity();
};

struct SessionConfig {
  std::uint64_t seed = 1;
  double telemetry_rate = 20.0;  // Hz
  double duration_cap = 60.0;    // s of simulated time for scripted runs
  int log_decimation = 1;
  int flush_every = 1000;
  double haptic_epsilon = 0.01;
};

/// Everything read from a scenario file. Missing keys keep the defaults
/// above; unknown keys are rejected.
struct Scenario {
  SceneConfig scene;
  ImpedanceProfile impedance;
  TrackerSetup tracker;
  TeleopConfig teleop;
  SessionConfig session;

  void validate() const;
};


Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical (sorted-key, %.17g) serialization with every key present.
std::string scenario_to_json(const Scenario& s);
std::string scenario_digest(const Scenario& s);

}  // namespace teleimp
