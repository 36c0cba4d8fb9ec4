// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include <cmath>

#include "teleimp/kernels.hpp"

namespace teleimp::kernels::scalar {

namespace {
constexpr double kDampingGain = 2.0 * 0.707;
}

void damping(const double* k, double* d, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) d[i] = kDampingGain * std::sqrt(k[i]);
}

void stiffness_affine(const double* p, double k_min, double k_max, double* k, std::size_t n) noexcept {
  const double span = k_max - k_min;
  for (std::size_t i = 0; i < n; ++i) {
    double v = p[i] < 0.0 ? 0.0 : p[i];
    v = v > 1.0 ? 1.0 : v;
    k[i] = k_min + v * span;
  }
}

double closure_residual(const double* k, const double* d, std::size_t n) noexcept {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::fabs(d[i] - kDampingGain * std::sqrt(k[i]));
    worst = r > worst ? r : worst;
  }
  return worst;
}

bool any_negative(const double* x, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] >= 0.0)) return true;
  }
  return false;
}

}  // namespace teleimp::kernels::scalar
