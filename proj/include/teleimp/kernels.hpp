// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace teleimp::kernels {

// Batched arithmetic used by the impedance mapping and the log validator.
// Every ISA variant must produce results bit-identical to the scalar
// reference; tests/unit/test_kernels.cpp enforces that.

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa) noexcept;

struct KernelTable {
  // d[i] = 2 * 0.707 * sqrt(k[i])
  void (*damping)(const double* k, double* d, std::size_t n) noexcept;
  // k[i] = k_min + clamp(p[i], 0, 1) * (k_max - k_min)
  void (*stiffness_affine)(const double* p, double k_min, double k_max, double* k,
                           std::size_t n) noexcept;
  // max_i |d[i] - 2 * 0.707 * sqrt(k[i])|
  double (*closure_residual)(const double* k, const double* d, std::size_t n) noexcept;
  // true if any element is negative or NaN
  bool (*any_negative)(const double* x, std::size_t n) noexcept;
};

bool supported(Isa isa) noexcept;
const KernelTable& table(Isa isa);

/// Best supported ISA, unless TELEIMP_KERNELS=scalar|avx2|neon overrides it.
Isa active_isa() noexcept;
const KernelTable& active();

// Dispatching wrappers over the active table.
void damping(std::span<const double> k, std::span<double> d);
void stiffness_affine(std::span<const double> p, double k_min, double k_max, std::span<double> k);
double closure_residual(std::span<const double> k, std::span<const double> d);

namespace scalar {
void damping(const double* k, double* d, std::size_t n) noexcept;
void stiffness_affine(const double* p, double k_min, double k_max, double* k, std::size_t n) noexcept;
double closure_residual(const double* k, const double* d, std::size_t n) noexcept;
bool any_negative(const double* x, std::size_t n) noexcept;
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void damping(const double* k, double* d, std::size_t n) noexcept;
void stiffness_affine(const double* p, double k_min, double k_max, double* k, std::size_t n) noexcept;
double closure_residual(const double* k, const double* d, std::size_t n) noexcept;
bool any_negative(const double* x, std::size_t n) noexcept;
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
void damping(const double* k, double* d, std::size_t n) noexcept;
void stiffness_affine(const double* p, double k_min, double k_max, double* k, std::size_t n) noexcept;
double closure_residual(const double* k, const double* d, std::size_t n) noexcept;
bool any_negative(const double* x, std::size_t n) noexcept;
}  // namespace neon
#endif

}  // namespace teleimp::kernels
