// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include "teleimp/impedance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "teleimp/error.hpp"
#include "teleimp/kernels.hpp"

namespace teleimp {

PressurePair::PressurePair(double translational, double rotational)
    : t_(std::clamp(std::isnan(translational) ? 0.0 : translational, 0.0, 1.0)),
      r_(std::clamp(std::isnan(rotational) ? 0.0 : rotational, 0.0, 1.0)) {}

void ImpedanceProfile::validate() const {
  auto check = [](double lo, double hi, const char* name) {
    if (!(lo >= 0.0 && lo < hi) || !std::isfinite(hi)) {
      throw Error(Errc::config, std::string(name) + " bounds must satisfy 0 <= min < max");
    }
  };
  check(k_t_min, k_t_max, "translational stiffness");
  check(k_r_min, k_r_max, "rotational stiffness");
  if (!(slew_t > 0.0) || !(slew_r > 0.0)) throw Error(Errc::config, "slew rates must be positive");
}

StiffnessPair pressure_to_stiffness(const PressurePair& p, const ImpedanceProfile& profile) {
  const double pt = p.translational();
  const double pr = p.rotational();
  StiffnessPair out;
  kernels::stiffness_affine({&pt, 1}, profile.k_t_min, profile.k_t_max, {&out.k_t, 1});
  kernels::stiffness_affine({&pr, 1}, profile.k_r_min, profile.k_r_max, {&out.k_r, 1});
  return out;
}

Vector6d damping_from_stiffness(const Vector6d& k_diag) {
  Vector6d d;
  kernels::damping({k_diag.data(), 6}, {d.data(), 6});
  return d;
}

double damping_from_stiffness(double k) {
  double d = 0.0;
  kernels::damping({&k, 1}, {&d, 1});
  return d;
}

ImpedanceCommand expand(double k_t, double k_r, const ImpedanceProfile& profile) {
  if (!(k_t >= profile.k_t_min && k_t <= profile.k_t_max)) {
    throw Error(Errc::bounds, "translational stiffness " + std::to_string(k_t) + " outside profile");
  }
  if (!(k_r >= profile.k_r_min && k_r <= profile.k_r_max)) {
    throw Error(Errc::bounds, "rotational stiffness " + std::to_string(k_r) + " outside profile");
  }
  ImpedanceCommand cmd;
  cmd.k_t = k_t;
  cmd.k_r = k_r;
  cmd.k_diag << k_t, k_t, k_t, k_r, k_r, k_r;
  cmd.d_diag = damping_from_stiffness(cmd.k_diag);
  return cmd;
}

namespace {

double step_toward(double from, double to, double max_step) {
  if (to > from) return std::min(to, from + max_step);
  return std::max(to, from - max_step);
}

}  // namespace

ImpedanceCommand slew_limit(const ImpedanceCommand& prev, const StiffnessPair& target, double dt,
                            const ImpedanceProfile& profile) {
  if (!(dt > 0.0)) throw Error(Errc::domain, "slew_limit needs dt > 0");
  const double t_target = std::clamp(target.k_t, profile.k_t_min, profile.k_t_max);
  const double r_target = std::clamp(target.k_r, profile.k_r_min, profile.k_r_max);
  const double k_t = std::clamp(step_toward(prev.k_t, t_target, profile.slew_t * dt),
                                profile.k_t_min, profile.k_t_max);
  const double k_r = std::clamp(step_toward(prev.k_r, r_target, profile.slew_r * dt),
                                profile.k_r_min, profile.k_r_max);
  return expand(k_t, k_r, profile);
}

}  // namespace teleimp
