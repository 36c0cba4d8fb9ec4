// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include "teleimp/error.hpp"

namespace teleimp {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::degenerate_weights: return "degenerate_weights";
    case Errc::degenerate_observation: return "degenerate_observation";
    case Errc::unknown_marker: return "unknown_marker";
    case Errc::no_pose_yet: return "no_pose_yet";
    case Errc::domain: return "domain";
    case Errc::bounds: return "bounds";
    case Errc::stale_pose: return "stale_pose";
    case Errc::sim_diverged: return "sim_diverged";
    case Errc::ordering: return "ordering";
    case Errc::state: return "state";
    case Errc::parse: return "parse";
    case Errc::incompatible_scenario: return "incompatible_scenario";
    case Errc::io: return "io";
    case Errc::config: return "config";
  }
  return "unknown";
}

}  // namespace teleimp
