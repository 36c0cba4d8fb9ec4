// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include "teleimp/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace teleimp::kernels::neon {

namespace {
constexpr double kDampingGain = 2.0 * 0.707;
}

void damping(const double* k, double* d, std::size_t n) noexcept {
  const float64x2_t gain = vdupq_n_f64(kDampingGain);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(d + i, vmulq_f64(gain, vsqrtq_f64(vld1q_f64(k + i))));
  }
  scalar::damping(k + i, d + i, n - i);
}

void stiffness_affine(const double* p, double k_min, double k_max, double* k, std::size_t n) noexcept {
  const float64x2_t lo = vdupq_n_f64(k_min);
  const float64x2_t span = vdupq_n_f64(k_max - k_min);
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t one = vdupq_n_f64(1.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vminq_f64(vmaxq_f64(vld1q_f64(p + i), zero), one);
    // separate mul + add: a fused multiply-add would round differently
    vst1q_f64(k + i, vaddq_f64(lo, vmulq_f64(v, span)));
  }
  scalar::stiffness_affine(p + i, k_min, k_max, k + i, n - i);
}

double closure_residual(const double* k, const double* d, std::size_t n) noexcept {
  const float64x2_t gain = vdupq_n_f64(kDampingGain);
  float64x2_t worst = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t ref = vmulq_f64(gain, vsqrtq_f64(vld1q_f64(k + i)));
    worst = vmaxq_f64(worst, vabsq_f64(vsubq_f64(vld1q_f64(d + i), ref)));
  }
  double out = scalar::closure_residual(k + i, d + i, n - i);
  const double a = vgetq_lane_f64(worst, 0);
  const double b = vgetq_lane_f64(worst, 1);
  out = a > out ? a : out;
  return b > out ? b : out;
}

bool any_negative(const double* x, std::size_t n) noexcept {
  return scalar::any_negative(x, n);
}

}  // namespace teleimp::kernels::neon

#endif
