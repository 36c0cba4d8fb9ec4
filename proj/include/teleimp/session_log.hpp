// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "teleimp/scenario.hpp"
#include "teleimp/se3.hpp"
#include "teleimp/sim.hpp"

namespace teleimp {

inline constexpr std::string_view kEpisodeSchema = "teleimp.episode/1";

/// One timestep: state, the action applied from it, and operator feedback.
struct StepRecord {
  double t = 0.0;
  std::uint64_t step = 0;
  // state
  Pose ee_pose;
  Twist ee_twist;
  Wrench ext_wrench;
  Pose peg_pose;
  Pose hole_pose;
  GripperState gripper = GripperState::open;
  bool grasped = false;
  // action
  Pose action_goal;
  double action_kt = 0.0;
  double action_kr = 0.0;
  GripperState action_gripper = GripperState::open;
  double damping_t = 0.0;
  double damping_r = 0.0;
  // operator side
  double scale = 1.0;
  bool clutch_engaged = false;
  double vibro = 0.0;
  Phase phase = Phase::reach;
};

struct EpisodeHeader {
  std::string schema{kEpisodeSchema};
  std::string episode_id;
  std::uint64_t seed = 0;
  double start_wall_time = 0.0;
  double dt = 0.001;
  int decimation = 1;
  std::string scenario_digest;
  std::string config_digest;
  // canonical JSON documents embedded verbatim
  std::string scenario_json;
  std::string config_json;
  std::string initial_state_json;
};

std::string encode_header(const EpisodeHeader& h);
EpisodeHeader decode_header(std::string_view line);
std::string encode_record(const StepRecord& r);
StepRecord decode_record(std::string_view line);

/// Line-oriented episode writer: header line, then one record per line.
class EpisodeWriter {
 public:
  EpisodeWriter(const std::filesystem::path& path, const EpisodeHeader& header, int flush_every = 1000);
  ~EpisodeWriter();
  EpisodeWriter(const EpisodeWriter&) = delete;
  EpisodeWriter& operator=(const EpisodeWriter&) = delete;

  /// Throws Errc::ordering unless record.t exceeds the previous t, and
  /// Errc::state once closed.
  void append(const StepRecord& record);
  void close();

  bool is_open() const noexcept { return open_; }
  std::size_t count() const noexcept { return count_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  int flush_every_;
  int since_flush_ = 0;
  std::size_t count_ = 0;
  double last_t_ = 0.0;
  bool open_ = false;
};

struct EpisodeFile {
  EpisodeHeader header;
  std::vector<StepRecord> records;
  std::vector<std::size_t> lines;  // 1-based line number of each record
  bool truncated = false;
  std::vector<std::string> warnings;
};

/// With `allow_truncated_tail`, an unparseable final line without a trailing
/// newline is dropped with a warning instead of failing.
EpisodeFile read_episode(const std::filesystem::path& path, bool allow_truncated_tail = false);

struct Violation {
  std::size_t line = 0;
  std::string what;
};

struct ValidationReport {
  std::size_t records = 0;
  std::vector<Violation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

/// Schema, digests, monotone time, quaternion norms, impedance bounds and
/// damping closure. Throws Errc::parse with the line number on an
/// unparseable line.
ValidationReport validate_episode(const std::filesystem::path& path);

struct ReplayReport {
  std::size_t steps = 0;
  double max_position_divergence = 0.0;     // m
  double max_orientation_divergence = 0.0;  // rad
  bool truncated = false;
  std::vector<std::string> warnings;
};

/// Re-simulates logged actions from the logged initial state. With a
/// scenario override, a digest mismatch throws Errc::incompatible_scenario
/// unless `force` is set.
ReplayReport replay_episode(const std::filesystem::path& path, const Scenario* override_scenario = nullptr,
                            bool force = false);

struct RequirementThresholds {
  double kt_low = 600.0;   // N/m, "low" translational phases stay below
  double kt_high = 1200.0; // N/m, "high" translational phases stay above
  double kr_low = 40.0;    // N m/rad, rotational stiffness during insertion
};

enum class RequirementStatus { satisfied, unsatisfied, incomplete };
std::string_view to_string(RequirementStatus s) noexcept;

struct RequirementResult {
  int id = 0;
  std::string name;
  Phase phase = Phase::reach;
  RequirementStatus status = RequirementStatus::incomplete;
  std::size_t samples = 0;
  double mean_kt = 0.0;
  double mean_kr = 0.0;
};

struct RequirementReport {
  std::array<RequirementResult, 4> requirements;
  bool all_satisfied() const noexcept;
};

RequirementReport check_requirements(const EpisodeFile& episode, const RequirementThresholds& thresholds = {});
RequirementReport check_requirements(const std::filesystem::path& path,
                                     const RequirementThresholds& thresholds = {});

}  // namespace teleimp
