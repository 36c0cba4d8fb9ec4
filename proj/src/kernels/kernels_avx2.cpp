// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include "teleimp/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

// Only this file's functions carry the avx2 target; nothing here may be
// reached unless the dispatcher has confirmed CPU support. Tails fall back to
// the scalar reference so lane remainders are bit-identical too.

#define TELEIMP_AVX2 __attribute__((target("avx2")))

namespace teleimp::kernels::avx2 {

namespace {
constexpr double kDampingGain = 2.0 * 0.707;
}

TELEIMP_AVX2 void damping(const double* k, double* d, std::size_t n) noexcept {
  const __m256d gain = _mm256_set1_pd(kDampingGain);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d kv = _mm256_loadu_pd(k + i);
    _mm256_storeu_pd(d + i, _mm256_mul_pd(gain, _mm256_sqrt_pd(kv)));
  }
  scalar::damping(k + i, d + i, n - i);
}

TELEIMP_AVX2 void stiffness_affine(const double* p, double k_min, double k_max, double* k,
                                   std::size_t n) noexcept {
  const __m256d lo = _mm256_set1_pd(k_min);
  const __m256d span = _mm256_set1_pd(k_max - k_min);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(p + i);
    v = _mm256_min_pd(_mm256_max_pd(v, zero), one);
    _mm256_storeu_pd(k + i, _mm256_add_pd(lo, _mm256_mul_pd(v, span)));
  }
  scalar::stiffness_affine(p + i, k_min, k_max, k + i, n - i);
}

TELEIMP_AVX2 double closure_residual(const double* k, const double* d, std::size_t n) noexcept {
  const __m256d gain = _mm256_set1_pd(kDampingGain);
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d worst = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ref = _mm256_mul_pd(gain, _mm256_sqrt_pd(_mm256_loadu_pd(k + i)));
    const __m256d r = _mm256_and_pd(_mm256_sub_pd(_mm256_loadu_pd(d + i), ref), abs_mask);
    worst = _mm256_max_pd(worst, r);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, worst);
  double out = scalar::closure_residual(k + i, d + i, n - i);
  for (const double l : lanes) out = l > out ? l : out;
  return out;
}

TELEIMP_AVX2 bool any_negative(const double* x, std::size_t n) noexcept {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d bad = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_NGE_UQ);
    if (_mm256_movemask_pd(bad) != 0) return true;
  }
  return scalar::any_negative(x + i, n - i);
}

}  // namespace teleimp::kernels::avx2

#endif
