// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "teleimp/impedance.hpp"
#include "teleimp/marker_tracker.hpp"
#include "teleimp/protocol.hpp"
#include "teleimp/scenario.hpp"
#include "teleimp/session_log.hpp"
#include "teleimp/sim.hpp"
#include "teleimp/teleop.hpp"

namespace teleimp {

enum class LogMode {
  none,
  whole_run,       // one file covering the whole session (scripted runs)
  per_engagement,  // new file in a directory per teleop engage (served runs)
};

struct SessionOptions {
  LogMode log_mode = LogMode::none;
  std::filesystem::path log_path;  // file for whole_run, directory for per_engagement
  Json config = Json::object();    // extra run configuration embedded in log headers
  bool wall_clock_headers = false; // false: start_wall_time = 0 for reproducible files
  double telemetry_rate = 0.0;     // Hz, 0 keeps the scenario value
};

/// The simulation-loop owner. Client messages are applied immediately at the
/// current simulated time; tick() advances the world by one step. Server
/// messages are handed to the outbox callback in order.
class Session {
 public:
  using Outbox = std::function<void(const wire::ServerMessage&)>;

  Session(Scenario scenario, SessionOptions options, Outbox outbox = {});
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  void handle(const wire::ClientMessage& msg);
  /// Decodes one frame; a malformed frame produces error{parse}.
  void handle_frame(std::string_view frame);
  void tick();

  /// Closes any open episode log.
  void finish();

  double time() const noexcept { return world_.t; }
  std::uint64_t step_index() const noexcept { return world_.step_index; }
  const World& world() const noexcept { return world_; }
  const Scenario& scenario() const noexcept { return scenario_; }
  const Pose& goal() const noexcept { return goal_; }
  const ImpedanceCommand& impedance() const noexcept { return impedance_; }
  const ClutchState& clutch() const noexcept { return clutch_; }
  const ScaleFactor& scale() const noexcept { return scale_; }
  GripperState gripper() const noexcept { return gripper_; }
  const EpisodeStatus& status() const noexcept { return status_; }
  bool succeeded() const noexcept { return succeeded_; }
  bool leader_stale() const noexcept { return leader_stale_; }
  std::optional<Pose> leader() const { return leader_; }
  std::uint64_t messages_applied() const noexcept { return messages_applied_; }
  /// Paths of every episode file finalized so far.
  const std::vector<std::filesystem::path>& finalized_logs() const noexcept { return finalized_; }
  bool log_open() const noexcept { return writer_ != nullptr; }

 private:
  void emit(const wire::ServerMessage& msg);
  void apply_pose_sample(const wire::PoseSample& s);
  void toggle_teleop();
  void refresh_leader();
  void open_log(const std::filesystem::path& path);
  void close_log();
  StepRecord make_record(const EpisodeStatus& st, const Wrench& ext, double vibro) const;

  Scenario scenario_;
  SessionOptions options_;
  Outbox outbox_;
  World world_;
  std::optional<MarkerTracker> tracker_;

  std::optional<Pose> leader_;
  double leader_time_ = 0.0;
  bool leader_stale_ = false;
  std::uint64_t pose_samples_ = 0;

  ClutchState clutch_;
  ScaleFactor scale_;
  GripperState gripper_ = GripperState::open;
  PressurePair pressure_;
  Pose goal_;
  ImpedanceCommand impedance_;
  EpisodeStatus status_;
  bool succeeded_ = false;

  std::uint64_t telemetry_every_ = 50;
  std::optional<double> last_haptic_;
  std::uint64_t messages_applied_ = 0;

  std::unique_ptr<EpisodeWriter> writer_;
  std::uint64_t episodes_started_ = 0;
  std::uint64_t log_step_offset_ = 0;
  std::vector<std::filesystem::path> finalized_;
};

/// Ordered (t, message) list standing in for a human operator.
struct ScriptEntry {
  double t = 0.0;
  wire::ClientMessage message;
};

struct OperatorScript {
  std::vector<ScriptEntry> entries;
};

/// One `{"t":...,"msg":{...}}` object per line. Throws Errc::parse (with line
/// number) on bad lines and Errc::ordering when t decreases.
OperatorScript parse_script(std::string_view text);
OperatorScript load_script(const std::filesystem::path& path);
std::string script_to_text(const OperatorScript& script);

/// The bundled peg-in-hole demonstration for the default scene.
OperatorScript make_peg_in_hole_script(const Scenario& scenario);
/// Scenario the bundled script is tuned for.
Scenario peg_in_hole_scenario();

enum class RunStatus { success, timeout };
std::string_view to_string(RunStatus s) noexcept;

struct RunResult {
  RunStatus status = RunStatus::timeout;
  EpisodeStatus final_status;
  std::uint64_t steps = 0;
  double sim_time = 0.0;
  std::vector<wire::ServerMessage> outbox;  // everything the session emitted
  std::vector<double> outbox_times;         // sim time of each emission
};

/// Injects each message at its timestamp against the fixed-step clock.
/// Throws Errc::domain if a timestamp lies beyond the duration cap.
RunResult run_script(const OperatorScript& script, const Scenario& scenario,
                     const std::optional<std::filesystem::path>& episode_out = std::nullopt,
                     bool keep_outbox = false);

}  // namespace teleimp
