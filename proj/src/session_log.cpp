// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include "teleimp/session_log.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "teleimp/digest.hpp"
#include "teleimp/error.hpp"
#include "teleimp/json_io.hpp"
#include "teleimp/kernels.hpp"

namespace teleimp {

namespace {

constexpr double kQuatNormTolerance = 1e-9;
constexpr double kClosureTolerance = 1e-9;

std::string_view gripper_name(GripperState g) { return g == GripperState::closed ? "closed" : "open"; }

GripperState gripper_from(const Json& doc, std::string_view name) {
  const Json& v = require_field(doc, name);
  if (v == "open") return GripperState::open;
  if (v == "closed") return GripperState::closed;
  throw Error(Errc::parse, "field '" + std::string(name) + "' must be open|closed");
}

bool bool_from(const Json& doc, std::string_view name) {
  const Json& v = require_field(doc, name);
  if (!v.is_boolean()) throw Error(Errc::parse, "field '" + std::string(name) + "' must be a boolean");
  return v.get<bool>();
}

const std::string& string_from(const Json& doc, std::string_view name) {
  const Json& v = require_field(doc, name);
  if (!v.is_string()) throw Error(Errc::parse, "field '" + std::string(name) + "' must be a string");
  return v.get_ref<const std::string&>();
}

std::uint64_t uint_from(const Json& doc, std::string_view name) {
  const Json& v = require_field(doc, name);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw Error(Errc::parse, "field '" + std::string(name) + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::vector<std::string> read_lines(const std::filesystem::path& path, bool& ends_with_newline) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open episode file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  ends_with_newline = !text.empty() && text.back() == '\n';
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    lines.emplace_back(text, start, end - start);
    start = end + 1;
  }
  return lines;
}

std::string at_line(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

}  // namespace

std::string encode_header(const EpisodeHeader& h) {
  JsonWriter w;
  w.begin_object();
  w.key("schema").value(h.schema);
  w.key("episode_id").value(h.episode_id);
  w.key("seed").value(h.seed);
  w.key("start_wall_time").value(h.start_wall_time);
  w.key("dt").value(h.dt);
  w.key("decimation").value(h.decimation);
  w.key("scenario_digest").value(h.scenario_digest);
  w.key("config_digest").value(h.config_digest);
  w.key("scenario").raw(h.scenario_json);
  w.key("config").raw(h.config_json);
  w.key("initial_state").raw(h.initial_state_json);
  w.end_object();
  return w.take();
}

EpisodeHeader decode_header(std::string_view line) {
  const Json doc = parse_json_text(line, "episode header");
  EpisodeHeader h;
  h.schema = string_from(doc, "schema");
  h.episode_id = string_from(doc, "episode_id");
  h.seed = uint_from(doc, "seed");
  h.start_wall_time = require_number(doc, "start_wall_time");
  h.dt = require_number(doc, "dt");
  const Json& dec = require_field(doc, "decimation");
  if (!dec.is_number_integer()) throw Error(Errc::parse, "field 'decimation' must be an integer");
  h.decimation = dec.get<int>();
  h.scenario_digest = string_from(doc, "scenario_digest");
  h.config_digest = string_from(doc, "config_digest");
  h.scenario_json = canonical_dump(require_field(doc, "scenario"));
  h.config_json = canonical_dump(require_field(doc, "config"));
  h.initial_state_json = canonical_dump(require_field(doc, "initial_state"));
  return h;
}

std::string encode_record(const StepRecord& r) {
  JsonWriter w;
  w.begin_object();
  w.key("t").value(r.t);
  w.key("step").value(r.step);
  w.key("ee").pose(r.ee_pose);
  w.key("ee_twist").begin_object().key("v").vec(r.ee_twist.linear).key("w").vec(r.ee_twist.angular).end_object();
  w.key("ext_wrench").begin_object().key("f").vec(r.ext_wrench.force).key("m").vec(r.ext_wrench.torque).end_object();
  w.key("peg").pose(r.peg_pose);
  w.key("hole").pose(r.hole_pose);
  w.key("gripper").value(gripper_name(r.gripper));
  w.key("grasped").value(r.grasped);
  w.key("action").begin_object();
  w.key("goal").pose(r.action_goal);
  w.key("kt").value(r.action_kt);
  w.key("kr").value(r.action_kr);
  w.key("gripper").value(gripper_name(r.action_gripper));
  w.end_object();
  w.key("damping").begin_array().value(r.damping_t).value(r.damping_r).end_array();
  w.key("scale").value(r.scale);
  w.key("clutch").value(r.clutch_engaged);
  w.key("vibro").value(r.vibro);
  w.key("phase").value(to_string(r.phase));
  w.key("frames").begin_object().key("static").null().key("wrist").null().end_object();
  w.end_object();
  return w.take();
}

namespace {

StepRecord record_from_json(const Json& doc) {
  StepRecord r;
  r.t = require_number(doc, "t");
  r.step = uint_from(doc, "step");
  r.ee_pose = parse_pose(require_field(doc, "ee"), "ee");
  const Json& tw = require_field(doc, "ee_twist");
  r.ee_twist.linear = parse_vec3(require_field(tw, "v"), "ee_twist.v");
  r.ee_twist.angular = parse_vec3(require_field(tw, "w"), "ee_twist.w");
  const Json& wr = require_field(doc, "ext_wrench");
  r.ext_wrench.force = parse_vec3(require_field(wr, "f"), "ext_wrench.f");
  r.ext_wrench.torque = parse_vec3(require_field(wr, "m"), "ext_wrench.m");
  r.peg_pose = parse_pose(require_field(doc, "peg"), "peg");
  r.hole_pose = parse_pose(require_field(doc, "hole"), "hole");
  r.gripper = gripper_from(doc, "gripper");
  r.grasped = bool_from(doc, "grasped");
  const Json& a = require_field(doc, "action");
  r.action_goal = parse_pose(require_field(a, "goal"), "action.goal");
  r.action_kt = require_number(a, "kt");
  r.action_kr = require_number(a, "kr");
  r.action_gripper = gripper_from(a, "gripper");
  const Json& d = require_field(doc, "damping");
  if (!d.is_array() || d.size() != 2 || !d[0].is_number() || !d[1].is_number()) {
    throw Error(Errc::parse, "field 'damping' must be [d_t, d_r]");
  }
  r.damping_t = d[0].get<double>();
  r.damping_r = d[1].get<double>();
  r.scale = require_number(doc, "scale");
  r.clutch_engaged = bool_from(doc, "clutch");
  r.vibro = require_number(doc, "vibro");
  r.phase = phase_from_string(string_from(doc, "phase"));
  return r;
}

}  // namespace

StepRecord decode_record(std::string_view line) { return record_from_json(parse_json_text(line, "record")); }

EpisodeWriter::EpisodeWriter(const std::filesystem::path& path, const EpisodeHeader& header, int flush_every)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), flush_every_(std::max(1, flush_every)) {
  if (!out_) throw Error(Errc::io, "cannot create episode file " + path.string());
  out_ << encode_header(header) << '\n';
  out_.flush();
  open_ = true;
}

EpisodeWriter::~EpisodeWriter() {
  if (open_) {
    try {
      close();
    } catch (...) {
    }
  }
}

void EpisodeWriter::append(const StepRecord& record) {
  if (!open_) throw Error(Errc::state, "episode writer is closed");
  if (count_ > 0 && !(record.t > last_t_)) {
    throw Error(Errc::ordering, "record t=" + format_number(record.t) + " does not exceed previous t=" +
                                    format_number(last_t_));
  }
  out_ << encode_record(record) << '\n';
  last_t_ = record.t;
  ++count_;
  if (++since_flush_ >= flush_every_) {
    out_.flush();
    since_flush_ = 0;
  }
  if (!out_) throw Error(Errc::io, "write to " + path_.string() + " failed");
}

void EpisodeWriter::close() {
  if (!open_) return;
  open_ = false;
  out_.flush();
  out_.close();
  if (out_.fail()) throw Error(Errc::io, "closing " + path_.string() + " failed");
}

EpisodeFile read_episode(const std::filesystem::path& path, bool allow_truncated_tail) {
  bool ends_with_newline = false;
  const std::vector<std::string> lines = read_lines(path, ends_with_newline);
  if (lines.empty()) throw Error(Errc::parse, "line 1: empty episode file");
  EpisodeFile ep;
  try {
    ep.header = decode_header(lines[0]);
  } catch (const Error& e) {
    throw Error(Errc::parse, at_line(1, e.what()));
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    try {
      ep.records.push_back(decode_record(lines[i]));
      ep.lines.push_back(i + 1);
    } catch (const Error& e) {
      const bool tail = i + 1 == lines.size() && !ends_with_newline;
      if (allow_truncated_tail && tail) {
        ep.truncated = true;
        ep.warnings.push_back(at_line(i + 1, "truncated final record ignored"));
        break;
      }
      throw Error(Errc::parse, at_line(i + 1, e.what()));
    }
  }
  return ep;
}

ValidationReport validate_episode(const std::filesystem::path& path) {
  bool ends_with_newline = false;
  const std::vector<std::string> lines = read_lines(path, ends_with_newline);
  if (lines.empty()) throw Error(Errc::parse, "line 1: empty episode file");

  ValidationReport report;
  auto flag = [&](std::size_t line, std::string what) { report.violations.push_back({line, std::move(what)}); };

  EpisodeHeader header;
  try {
    header = decode_header(lines[0]);
  } catch (const Error& e) {
    throw Error(Errc::parse, at_line(1, e.what()));
  }
  if (header.schema != kEpisodeSchema) flag(1, "unsupported schema '" + header.schema + "'");
  if (sha256_hex(header.scenario_json) != header.scenario_digest) flag(1, "scenario digest mismatch");
  if (sha256_hex(header.config_json) != header.config_digest) flag(1, "config digest mismatch");

  ImpedanceProfile profile;
  try {
    profile = parse_scenario(header.scenario_json).impedance;
  } catch (const Error& e) {
    flag(1, std::string("embedded scenario invalid: ") + e.what());
  }

  std::vector<double> k;
  std::vector<double> d;
  std::vector<std::size_t> k_lines;
  double last_t = 0.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line = i + 1;
    Json doc;
    StepRecord r;
    try {
      doc = parse_json_text(lines[i], "record");
      r = record_from_json(doc);
    } catch (const Error& e) {
      throw Error(Errc::parse, at_line(line, e.what()));
    }
    ++report.records;

    if (report.records > 1 && !(r.t > last_t)) flag(line, "time not strictly increasing");
    last_t = r.t;

    // raw norms: decoding already renormalized the Pose values
    const auto check_quat = [&](const Json& pose, const char* name) {
      const Json& q = pose.at("q");
      double n2 = 0.0;
      for (const auto& c : q) n2 += c.get<double>() * c.get<double>();
      const double n = std::sqrt(n2);
      if (std::abs(n - 1.0) > kQuatNormTolerance) {
        flag(line, std::string(name) + " quaternion norm " + format_number(n));
      }
    };
    check_quat(doc.at("ee"), "ee");
    check_quat(doc.at("peg"), "peg");
    check_quat(doc.at("hole"), "hole");
    check_quat(doc.at("action").at("goal"), "action.goal");

    if (!(r.action_kt >= profile.k_t_min && r.action_kt <= profile.k_t_max)) {
      flag(line, "kt " + format_number(r.action_kt) + " outside [" + format_number(profile.k_t_min) + ", " +
                     format_number(profile.k_t_max) + "]");
    }
    if (!(r.action_kr >= profile.k_r_min && r.action_kr <= profile.k_r_max)) {
      flag(line, "kr " + format_number(r.action_kr) + " outside [" + format_number(profile.k_r_min) + ", " +
                     format_number(profile.k_r_max) + "]");
    }
    if (r.action_kt < 0.0 || r.action_kr < 0.0) continue;
    k.push_back(r.action_kt);
    k.push_back(r.action_kr);
    d.push_back(r.damping_t);
    d.push_back(r.damping_r);
    k_lines.push_back(line);
  }

  // batch check first; only walk the records when something is off
  if (!k.empty() && kernels::closure_residual(k, d) > kClosureTolerance) {
    for (std::size_t j = 0; j < k_lines.size(); ++j) {
      const double r = kernels::closure_residual({&k[2 * j], 2}, {&d[2 * j], 2});
      if (r > kClosureTolerance) flag(k_lines[j], "damping does not match stiffness (residual " + format_number(r) + ")");
    }
  }
  std::stable_sort(report.violations.begin(), report.violations.end(),
                   [](const Violation& a, const Violation& b) { return a.line < b.line; });
  return report;
}

ReplayReport replay_episode(const std::filesystem::path& path, const Scenario* override_scenario, bool force) {
  EpisodeFile ep = read_episode(path, true);
  ReplayReport report;
  report.truncated = ep.truncated;
  report.warnings = ep.warnings;

  Scenario scenario;
  if (override_scenario) {
    if (scenario_digest(*override_scenario) != ep.header.scenario_digest) {
      if (!force) throw Error(Errc::incompatible_scenario, "scenario digest does not match episode " + path.string());
      report.warnings.push_back("scenario digest mismatch ignored (forced)");
    }
    scenario = *override_scenario;
  } else {
    if (sha256_hex(ep.header.scenario_json) != ep.header.scenario_digest) {
      throw Error(Errc::incompatible_scenario, "embedded scenario does not match its digest");
    }
    scenario = parse_scenario(ep.header.scenario_json);
  }

  World world = make_world(scenario.scene, ep.header.seed);
  read_world_state(parse_json_text(ep.header.initial_state_json, "initial_state"), world);
  const double dt = ep.header.dt;
  const int substeps = std::max(1, ep.header.decimation);

  for (const StepRecord& r : ep.records) {
    report.max_position_divergence =
        std::max({report.max_position_divergence, (world.ee.pose.position() - r.ee_pose.position()).norm(),
                  (world.peg.pose.position() - r.peg_pose.position()).norm()});
    report.max_orientation_divergence =
        std::max({report.max_orientation_divergence, geodesic_angle(world.ee.pose.orientation(), r.ee_pose.orientation()),
                  geodesic_angle(world.peg.pose.orientation(), r.peg_pose.orientation())});
    ++report.steps;
    if (r.phase == Phase::done) break;
    const SimCommand cmd{r.action_goal, expand(r.action_kt, r.action_kr, scenario.impedance), r.action_gripper};
    for (int s = 0; s < substeps; ++s) step_in_place(world, cmd, dt);
  }
  return report;
}

std::string_view to_string(RequirementStatus s) noexcept {
  switch (s) {
    case RequirementStatus::satisfied: return "satisfied";
    case RequirementStatus::unsatisfied: return "unsatisfied";
    case RequirementStatus::incomplete: return "incomplete";
  }
  return "incomplete";
}

bool RequirementReport::all_satisfied() const noexcept {
  return std::all_of(requirements.begin(), requirements.end(),
                     [](const RequirementResult& r) { return r.status == RequirementStatus::satisfied; });
}

RequirementReport check_requirements(const EpisodeFile& episode, const RequirementThresholds& th) {
  RequirementReport report;
  const std::array<std::pair<const char*, Phase>, 4> defs{{
      {"low impedance while reaching", Phase::reach},
      {"high impedance while transporting", Phase::transport},
      {"low impedance while aligning", Phase::align},
      {"stiff translation, soft rotation while inserting", Phase::insert},
  }};
  for (std::size_t i = 0; i < defs.size(); ++i) {
    RequirementResult& res = report.requirements[i];
    res.id = static_cast<int>(i) + 1;
    res.name = defs[i].first;
    res.phase = defs[i].second;
    double sum_kt = 0.0;
    double sum_kr = 0.0;
    for (const StepRecord& r : episode.records) {
      if (r.phase != res.phase) continue;
      sum_kt += r.action_kt;
      sum_kr += r.action_kr;
      ++res.samples;
    }
    if (res.samples == 0) continue;
    res.mean_kt = sum_kt / static_cast<double>(res.samples);
    res.mean_kr = sum_kr / static_cast<double>(res.samples);
    bool ok = false;
    switch (res.phase) {
      case Phase::reach:
      case Phase::align: ok = res.mean_kt < th.kt_low; break;
      case Phase::transport: ok = res.mean_kt > th.kt_high; break;
      case Phase::insert: ok = res.mean_kt > th.kt_high && res.mean_kr < th.kr_low; break;
      case Phase::done: break;
    }
    res.status = ok ? RequirementStatus::satisfied : RequirementStatus::unsatisfied;
  }
  return report;
}

RequirementReport check_requirements(const std::filesystem::path& path, const RequirementThresholds& th) {
  return check_requirements(read_episode(path), th);
}

}  // namespace teleimp
