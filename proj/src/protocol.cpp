// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include "teleimp/protocol.hpp"

#include <algorithm>
#include <cmath>

#include "teleimp/error.hpp"
#include "teleimp/json_io.hpp"
#include "teleimp/teleop.hpp"

namespace teleimp::wire {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double clamp_field(double v, double lo, double hi, const char* name, DecodedClient& out) {
  if (std::isnan(v)) throw Error(Errc::parse, std::string("field '") + name + "' is NaN");
  const double c = std::clamp(v, lo, hi);
  if (c != v) {
    out.clamped = true;
    out.warnings.push_back(std::string(name) + " clamped to range");
  }
  return c;
}

const std::string& require_string(const Json& doc, std::string_view name) {
  const Json& v = require_field(doc, name);
  if (!v.is_string()) throw Error(Errc::parse, "field '" + std::string(name) + "' must be a string");
  return v.get_ref<const std::string&>();
}

bool require_bool(const Json& doc, std::string_view name) {
  const Json& v = require_field(doc, name);
  if (!v.is_boolean()) throw Error(Errc::parse, "field '" + std::string(name) + "' must be a boolean");
  return v.get<bool>();
}

Json parse_frame(std::string_view frame) {
  Json doc = parse_json_text(frame, "frame");
  if (!doc.is_object()) throw Error(Errc::parse, "frame must be a JSON object");
  return doc;
}

}  // namespace

std::string_view type_name(const ClientMessage& msg) noexcept {
  return std::visit(overloaded{
                        [](const PoseSample&) { return std::string_view("pose_sample"); },
                        [](const Fsr&) { return std::string_view("fsr"); },
                        [](const GripperToggle&) { return std::string_view("gripper_toggle"); },
                        [](const TeleopToggle&) { return std::string_view("teleop_toggle"); },
                        [](const ScaleSet&) { return std::string_view("scale_set"); },
                    },
                    msg);
}

std::string encode(const ClientMessage& msg) {
  JsonWriter w;
  w.begin_object();
  w.key("type").value(type_name(msg));
  std::visit(overloaded{
                 [&](const PoseSample& m) {
                   const Eigen::Quaterniond& q = m.pose.orientation();
                   w.key("t").value(m.t);
                   w.key("p").vec(m.pose.position());
                   w.key("q").begin_array().value(q.w()).value(q.x()).value(q.y()).value(q.z()).end_array();
                 },
                 [&](const Fsr& m) {
                   w.key("t").value(m.t);
                   w.key("pt").value(m.pt);
                   w.key("pr").value(m.pr);
                 },
                 [](const GripperToggle&) {},
                 [](const TeleopToggle&) {},
                 [&](const ScaleSet& m) { w.key("s").value(m.s); },
             },
             msg);
  w.end_object();
  return w.take();
}

DecodedClient decode_client(std::string_view frame) {
  const Json doc = parse_frame(frame);
  const std::string& type = require_string(doc, "type");
  DecodedClient out;
  if (type == "pose_sample") {
    PoseSample m;
    m.t = require_number(doc, "t");
    m.pose = parse_pose(doc, "pose_sample");
    out.message = m;
  } else if (type == "fsr") {
    Fsr m;
    m.t = require_number(doc, "t");
    m.pt = clamp_field(require_number(doc, "pt"), 0.0, 1.0, "pt", out);
    m.pr = clamp_field(require_number(doc, "pr"), 0.0, 1.0, "pr", out);
    out.message = m;
  } else if (type == "gripper_toggle") {
    out.message = GripperToggle{};
  } else if (type == "teleop_toggle") {
    out.message = TeleopToggle{};
  } else if (type == "scale_set") {
    out.message = ScaleSet{clamp_field(require_number(doc, "s"), ScaleFactor::kMin, ScaleFactor::kMax, "s", out)};
  } else {
    throw Error(Errc::parse, "unknown message type '" + type + "'");
  }
  return out;
}

std::string encode(const ServerMessage& msg) {
  JsonWriter w;
  w.begin_object();
  std::visit(overloaded{
                 [&](const Telemetry& m) {
                   w.key("type").value("telemetry");
                   w.key("t").value(m.t);
                   w.key("ee_pose").pose(m.ee_pose);
                   w.key("goal_pose").pose(m.goal_pose);
                   w.key("kt").value(m.kt);
                   w.key("kr").value(m.kr);
                   w.key("ext_force_norm").value(m.ext_force_norm);
                   w.key("phase").value(m.phase);
                   w.key("success").value(m.success);
                   w.key("stale").value(m.stale);
                 },
                 [&](const Haptic& m) {
                   w.key("type").value("haptic");
                   w.key("amplitude").value(m.amplitude);
                 },
                 [&](const Bars& m) {
                   w.key("type").value("bars");
                   w.key("kt_frac").value(m.kt_frac);
                   w.key("kr_frac").value(m.kr_frac);
                 },
                 [&](const ErrorReply& m) {
                   w.key("type").value("error");
                   w.key("code").value(m.code);
                   w.key("detail").value(m.detail);
                 },
             },
             msg);
  w.end_object();
  return w.take();
}

ServerMessage decode_server(std::string_view frame) {
  const Json doc = parse_frame(frame);
  const std::string& type = require_string(doc, "type");
  if (type == "telemetry") {
    Telemetry m;
    m.t = require_number(doc, "t");
    m.ee_pose = parse_pose(require_field(doc, "ee_pose"), "ee_pose");
    m.goal_pose = parse_pose(require_field(doc, "goal_pose"), "goal_pose");
    m.kt = require_number(doc, "kt");
    m.kr = require_number(doc, "kr");
    m.ext_force_norm = require_number(doc, "ext_force_norm");
    m.phase = require_string(doc, "phase");
    m.success = require_bool(doc, "success");
    m.stale = require_bool(doc, "stale");
    return m;
  }
  if (type == "haptic") return Haptic{require_number(doc, "amplitude")};
  if (type == "bars") return Bars{require_number(doc, "kt_frac"), require_number(doc, "kr_frac")};
  if (type == "error") return ErrorReply{require_string(doc, "code"), require_string(doc, "detail")};
  throw Error(Errc::parse, "unknown message type '" + type + "'");
}

}  // namespace teleimp::wire
