// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#pragma once

#include <Eigen/Core>

namespace teleimp {

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Damping ratio baked into the damping design rule. Not a parameter.
inline constexpr double kDampingRatio = 0.707;

/// Normalized button pressures. Clamped to [0,1] on construction.
class PressurePair {
 public:
  PressurePair() = default;
  PressurePair(double translational, double rotational);

  double translational() const noexcept { return t_; }
  double rotational() const noexcept { return r_; }

 private:
  double t_ = 0.0;
  double r_ = 0.0;
};

struct ImpedanceProfile {
  double k_t_min = 100.0;   // N/m
  double k_t_max = 2000.0;  // N/m
  double k_r_min = 5.0;     // N m/rad
  double k_r_max = 150.0;   // N m/rad
  double slew_t = 2000.0;   // N/m per s
  double slew_r = 150.0;    // N m/rad per s

  /// Throws Errc::config unless 0 <= k_min < k_max and slews > 0.
  void validate() const;
  double kt_fraction(double k_t) const { return (k_t - k_t_min) / (k_t_max - k_t_min); }
  double kr_fraction(double k_r) const { return (k_r - k_r_min) / (k_r_max - k_r_min); }
};

struct StiffnessPair {
  double k_t = 0.0;
  double k_r = 0.0;
};

/// Diagonal 6x6 stiffness/damping pair, translational block first.
struct ImpedanceCommand {
  double k_t = 0.0;
  double k_r = 0.0;
  Vector6d k_diag = Vector6d::Zero();
  Vector6d d_diag = Vector6d::Zero();
};

StiffnessPair pressure_to_stiffness(const PressurePair& p, const ImpedanceProfile& profile);

/// d[j] = 2 * 0.707 * sqrt(k[j]). Throws Errc::domain on a negative entry.
Vector6d damping_from_stiffness(const Vector6d& k_diag);
double damping_from_stiffness(double k);

/// Builds the block-diagonal command; throws Errc::bounds when a channel
/// falls outside the profile.
ImpedanceCommand expand(double k_t, double k_r, const ImpedanceProfile& profile);

/// Moves each channel toward the target by at most slew * dt, no overshoot.
ImpedanceCommand slew_limit(const ImpedanceCommand& prev, const StiffnessPair& target, double dt,
                            const ImpedanceProfile& profile);

}  // namespace teleimp
