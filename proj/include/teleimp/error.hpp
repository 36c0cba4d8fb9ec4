// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace teleimp {

enum class Errc {
  degenerate_weights,
  degenerate_observation,
  unknown_marker,
  no_pose_yet,
  domain,
  bounds,
  stale_pose,
  sim_diverged,
  ordering,
  state,
  parse,
  incompatible_scenario,
  io,
  config,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace teleimp
