// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "teleimp/se3.hpp"

namespace teleimp::wire {

// Operator -> server. One JSON object per frame, tagged by "type".

struct PoseSample {
  double t = 0.0;
  Pose pose;
  friend bool operator==(const PoseSample&, const PoseSample&) = default;
};

struct Fsr {
  double t = 0.0;
  double pt = 0.0;  // [0,1]
  double pr = 0.0;  // [0,1]
  friend bool operator==(const Fsr&, const Fsr&) = default;
};

struct GripperToggle {
  friend bool operator==(const GripperToggle&, const GripperToggle&) = default;
};

struct TeleopToggle {
  friend bool operator==(const TeleopToggle&, const TeleopToggle&) = default;
};

struct ScaleSet {
  double s = 1.0;  // [0.1, 2.0]
  friend bool operator==(const ScaleSet&, const ScaleSet&) = default;
};

using ClientMessage = std::variant<PoseSample, Fsr, GripperToggle, TeleopToggle, ScaleSet>;

// Server -> operator.

struct Telemetry {
  double t = 0.0;
  Pose ee_pose;
  Pose goal_pose;
  double kt = 0.0;
  double kr = 0.0;
  double ext_force_norm = 0.0;
  std::string phase = "reach";
  bool success = false;
  bool stale = false;
  friend bool operator==(const Telemetry&, const Telemetry&) = default;
};

struct Haptic {
  double amplitude = 0.0;
  friend bool operator==(const Haptic&, const Haptic&) = default;
};

struct Bars {
  double kt_frac = 0.0;
  double kr_frac = 0.0;
  friend bool operator==(const Bars&, const Bars&) = default;
};

struct ErrorReply {
  std::string code;
  std::string detail;
  friend bool operator==(const ErrorReply&, const ErrorReply&) = default;
};

using ServerMessage = std::variant<Telemetry, Haptic, Bars, ErrorReply>;

struct DecodedClient {
  ClientMessage message;
  bool clamped = false;  // a value was pulled back into its allowed range
  std::vector<std::string> warnings;
};

std::string encode(const ClientMessage& msg);
std::string encode(const ServerMessage& msg);

/// Throws Errc::parse (naming the missing or malformed field) on bad input
/// and on unknown tags. Out-of-range pressures and scales are clamped and
/// reported through `clamped`/`warnings`.
DecodedClient decode_client(std::string_view frame);
ServerMessage decode_server(std::string_view frame);

std::string_view type_name(const ClientMessage& msg) noexcept;

}  // namespace teleimp::wire
