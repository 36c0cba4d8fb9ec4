// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include "teleimp/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "teleimp/digest.hpp"
#include "teleimp/error.hpp"
#include "teleimp/rng.hpp"

namespace teleimp {

namespace {

constexpr std::uint64_t kPoseSampleSalt = 4;
// messages stamped within this of a step boundary belong to that step
constexpr double kTimeSlack = 1e-9;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double wall_seconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

Session::Session(Scenario scenario, SessionOptions options, Outbox outbox)
    : scenario_(std::move(scenario)), options_(std::move(options)), outbox_(std::move(outbox)) {
  scenario_.validate();
  world_ = make_world(scenario_.scene, scenario_.session.seed);
  goal_ = world_.ee.pose;
  impedance_ = expand(scenario_.impedance.k_t_min, scenario_.impedance.k_r_min, scenario_.impedance);
  scale_.set(scenario_.teleop.scale);
  if (scenario_.tracker.mode == TrackerMode::synthetic) {
    tracker_.emplace(PolyhedronGeometry::default_cube(scenario_.tracker.cube_edge, scenario_.tracker.stem),
                     scenario_.tracker.config);
  }
  const double rate = options_.telemetry_rate > 0.0 ? options_.telemetry_rate : scenario_.session.telemetry_rate;
  if (!(rate > 0.0)) throw Error(Errc::config, "telemetry rate must be positive");
  telemetry_every_ = static_cast<std::uint64_t>(std::max(1.0, std::round(1.0 / (rate * scenario_.scene.dt))));
  status_ = check_success(world_);
  if (options_.log_mode == LogMode::whole_run) open_log(options_.log_path);
  if (options_.log_mode == LogMode::per_engagement) std::filesystem::create_directories(options_.log_path);
}

Session::~Session() {
  try {
    finish();
  } catch (...) {
  }
}

void Session::emit(const wire::ServerMessage& msg) {
  if (outbox_) outbox_(msg);
}

void Session::handle_frame(std::string_view frame) {
  wire::DecodedClient decoded;
  try {
    decoded = wire::decode_client(frame);
  } catch (const Error& e) {
    emit(wire::ErrorReply{"parse", e.what()});
    return;
  }
  handle(decoded.message);
}

void Session::handle(const wire::ClientMessage& msg) {
  ++messages_applied_;
  std::visit(overloaded{
                 [&](const wire::PoseSample& s) { apply_pose_sample(s); },
                 [&](const wire::Fsr& f) { pressure_ = PressurePair(f.pt, f.pr); },
                 [&](const wire::GripperToggle&) { gripper_ = gripper_toggle(gripper_); },
                 [&](const wire::TeleopToggle&) { toggle_teleop(); },
                 [&](const wire::ScaleSet& s) {
                   scale_.set(s.s);
                   // re-anchor so the new scale applies to subsequent motion only
                   if (clutch_.engaged && leader_) clutch_ = ClutchState{true, *leader_, goal_};
                 },
             },
             msg);
}

void Session::apply_pose_sample(const wire::PoseSample& s) {
  const double now = world_.t;
  if (!tracker_) {
    leader_ = s.pose;
    leader_time_ = now;
    leader_stale_ = false;
    return;
  }
  const auto obs = synth_observe(s.pose, tracker_->geometry(), tracker_->config(), scenario_.tracker.noise,
                                 stream_seed(scenario_.session.seed, pose_samples_++, kPoseSampleSalt), now);
  try {
    const TrackedPose tp = tracker_->step(obs, now);
    leader_ = tp.pose_world;
    leader_stale_ = tp.stale;
  } catch (const Error& e) {
    if (e.code() != Errc::no_pose_yet) throw;
  }
}

void Session::refresh_leader() {
  if (!leader_) return;
  if (tracker_) {
    leader_stale_ = tracker_->step({}, world_.t).stale;
  } else {
    leader_stale_ = world_.t - leader_time_ > scenario_.tracker.config.stale_timeout;
  }
}

void Session::toggle_teleop() {
  if (clutch_.engaged) {
    clutch_ = disengage(clutch_);
    if (options_.log_mode == LogMode::per_engagement) close_log();
    return;
  }
  if (!leader_) {
    emit(wire::ErrorReply{"no_pose", "no operator pose received yet"});
    return;
  }
  refresh_leader();
  try {
    clutch_ = engage(*leader_, goal_, leader_stale_);
  } catch (const Error& e) {
    if (e.code() != Errc::stale_pose) throw;
    emit(wire::ErrorReply{"stale", e.what()});
    return;
  }
  if (options_.log_mode == LogMode::per_engagement) {
    char name[64];
    std::snprintf(name, sizeof name, "episode-%06llu.ndjson", static_cast<unsigned long long>(episodes_started_));
    open_log(options_.log_path / name);
  }
}

void Session::open_log(const std::filesystem::path& path) {
  close_log();
  EpisodeHeader h;
  char id[64];
  std::snprintf(id, sizeof id, "%016llx-%llu", static_cast<unsigned long long>(scenario_.session.seed),
                static_cast<unsigned long long>(episodes_started_));
  h.episode_id = id;
  h.seed = scenario_.session.seed;
  h.start_wall_time = options_.wall_clock_headers ? wall_seconds() : 0.0;
  h.dt = scenario_.scene.dt;
  h.decimation = scenario_.session.log_decimation;
  h.scenario_json = scenario_to_json(scenario_);
  h.scenario_digest = sha256_hex(h.scenario_json);
  Json config = options_.config;
  config["decimation"] = scenario_.session.log_decimation;
  config["flush_every"] = scenario_.session.flush_every;
  h.config_json = canonical_dump(config);
  h.config_digest = sha256_hex(h.config_json);
  JsonWriter w;
  write_world_state(w, world_);
  h.initial_state_json = canonical_dump(parse_json_text(w.str(), "initial_state"));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  writer_ = std::make_unique<EpisodeWriter>(path, h, scenario_.session.flush_every);
  log_step_offset_ = world_.step_index;
  ++episodes_started_;
}

void Session::close_log() {
  if (!writer_) return;
  writer_->close();
  finalized_.push_back(writer_->path());
  writer_.reset();
}

void Session::finish() { close_log(); }

StepRecord Session::make_record(const EpisodeStatus& st, const Wrench& ext, double vibro) const {
  StepRecord r;
  r.t = world_.t;
  r.step = world_.step_index;
  r.ee_pose = world_.ee.pose;
  r.ee_twist = world_.ee.twist;
  r.ext_wrench = ext;
  r.peg_pose = world_.peg.pose;
  r.hole_pose = scenario_.scene.hole_pose;
  r.gripper = world_.gripper;
  r.grasped = world_.grasped;
  r.action_goal = goal_;
  r.action_kt = impedance_.k_t;
  r.action_kr = impedance_.k_r;
  r.action_gripper = gripper_;
  r.damping_t = impedance_.d_diag[0];
  r.damping_r = impedance_.d_diag[3];
  r.scale = scale_.value();
  r.clutch_engaged = clutch_.engaged;
  r.vibro = vibro;
  r.phase = st.phase;
  return r;
}

void Session::tick() {
  const double dt = scenario_.scene.dt;
  const ImpedanceProfile& profile = scenario_.impedance;

  refresh_leader();
  if (clutch_.engaged && leader_ && !leader_stale_) {
    if (auto g = map_leader_to_goal(*leader_, clutch_, scale_, scenario_.teleop.r_offset)) goal_ = *g;
  }
  impedance_ = slew_limit(impedance_, pressure_to_stiffness(pressure_, profile), dt, profile);

  status_ = check_success(world_);
  const Wrench ext = estimate_external_wrench(world_);
  const double vibro = vibro_amplitude(ext, scenario_.teleop.f_sat).amplitude;
  const bool first_success = status_.success && !succeeded_;

  if (writer_) {
    const auto dec = static_cast<std::uint64_t>(std::max(1, scenario_.session.log_decimation));
    if ((world_.step_index - log_step_offset_) % dec == 0 || first_success) {
      writer_->append(make_record(status_, ext, vibro));
    }
  }

  if (world_.step_index % telemetry_every_ == 0 || first_success) {
    wire::Telemetry tm;
    tm.t = world_.t;
    tm.ee_pose = world_.ee.pose;
    tm.goal_pose = goal_;
    tm.kt = impedance_.k_t;
    tm.kr = impedance_.k_r;
    tm.ext_force_norm = ext.force.norm();
    tm.phase = std::string(to_string(status_.phase));
    tm.success = status_.success || succeeded_;
    tm.stale = leader_stale_;
    emit(tm);
    emit(wire::Bars{std::clamp(profile.kt_fraction(impedance_.k_t), 0.0, 1.0),
                    std::clamp(profile.kr_fraction(impedance_.k_r), 0.0, 1.0)});
  }
  if (!last_haptic_ || std::abs(vibro - *last_haptic_) > scenario_.session.haptic_epsilon) {
    last_haptic_ = vibro;
    emit(wire::Haptic{vibro});
  }

  if (first_success) {
    succeeded_ = true;
    close_log();
  }
  step_in_place(world_, SimCommand{goal_, impedance_, gripper_}, dt);
}

// ---------------------------------------------------------------------------
// scripts

OperatorScript parse_script(std::string_view text) {
  OperatorScript script;
  std::size_t line_no = 0;
  std::size_t start = 0;
  double last_t = -1e300;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const Json doc = parse_json_text(line, "script line");
      ScriptEntry e;
      e.t = require_number(doc, "t");
      e.message = wire::decode_client(require_field(doc, "msg").dump()).message;
      if (e.t < last_t) {
        throw Error(Errc::ordering, "t=" + format_number(e.t) + " precedes t=" + format_number(last_t));
      }
      last_t = e.t;
      script.entries.push_back(std::move(e));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return script;
}

OperatorScript load_script(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open script " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_script(buf.str());
}

std::string script_to_text(const OperatorScript& script) {
  std::string out;
  for (const ScriptEntry& e : script.entries) {
    out += "{\"t\":" + format_number(e.t) + ",\"msg\":" + wire::encode(e.message) + "}\n";
  }
  return out;
}

std::string_view to_string(RunStatus s) noexcept { return s == RunStatus::success ? "success" : "timeout"; }

RunResult run_script(const OperatorScript& script, const Scenario& scenario,
                     const std::optional<std::filesystem::path>& episode_out, bool keep_outbox) {
  const double cap = scenario.session.duration_cap;
  for (const ScriptEntry& e : script.entries) {
    if (e.t > cap) throw Error(Errc::domain, "script entry at t=" + format_number(e.t) + " beyond duration cap");
  }

  RunResult result;
  SessionOptions opts;
  if (episode_out) {
    opts.log_mode = LogMode::whole_run;
    opts.log_path = *episode_out;
    opts.config = Json{{"mode", "script"}, {"script_digest", sha256_hex(script_to_text(script))}};
  }
  const Session* clock = nullptr;
  Session::Outbox outbox;
  if (keep_outbox) {
    outbox = [&](const wire::ServerMessage& m) {
      result.outbox.push_back(m);
      result.outbox_times.push_back(clock ? clock->time() : 0.0);
    };
  }
  Session session(scenario, opts, outbox);
  clock = &session;

  const auto max_steps = static_cast<std::uint64_t>(std::llround(cap / scenario.scene.dt));
  std::size_t next = 0;
  while (session.step_index() < max_steps) {
    while (next < script.entries.size() && script.entries[next].t <= session.time() + kTimeSlack) {
      session.handle(script.entries[next].message);
      ++next;
    }
    session.tick();
    if (session.succeeded()) break;
  }
  session.finish();
  result.status = session.succeeded() ? RunStatus::success : RunStatus::timeout;
  result.final_status = session.status();
  result.steps = session.step_index();
  result.sim_time = session.time();
  return result;
}

}  // namespace teleimp
