// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include <cstdlib>
#include <string>

#include "teleimp/error.hpp"
#include "teleimp/kernels.hpp"

namespace teleimp::kernels {

namespace {

constexpr KernelTable kScalar{scalar::damping, scalar::stiffness_affine, scalar::closure_residual,
                              scalar::any_negative};
#if defined(__x86_64__) || defined(_M_X64)
constexpr KernelTable kAvx2{avx2::damping, avx2::stiffness_affine, avx2::closure_residual,
                            avx2::any_negative};
#endif
#if defined(__aarch64__)
constexpr KernelTable kNeon{neon::damping, neon::stiffness_affine, neon::closure_residual,
                            neon::any_negative};
#endif

Isa detect() noexcept {
  if (const char* env = std::getenv("TELEIMP_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && supported(Isa::avx2)) return Isa::avx2;
    if (want == "neon" && supported(Isa::neon)) return Isa::neon;
  }
  if (supported(Isa::avx2)) return Isa::avx2;
  if (supported(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw Error(Errc::domain, "kernel input and output spans differ in length");
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "scalar";
}

bool supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!supported(isa)) throw Error(Errc::domain, "kernel ISA not supported on this CPU: " + std::string(to_string(isa)));
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2: return kAvx2;
#endif
#if defined(__aarch64__)
    case Isa::neon: return kNeon;
#endif
    default: return kScalar;
  }
}

Isa active_isa() noexcept {
  static const Isa isa = detect();
  return isa;
}

const KernelTable& active() {
  static const KernelTable& t = table(active_isa());
  return t;
}

void damping(std::span<const double> k, std::span<double> d) {
  check_sizes(k.size(), d.size());
  const KernelTable& t = active();
  if (t.any_negative(k.data(), k.size())) throw Error(Errc::domain, "stiffness must be non-negative");
  t.damping(k.data(), d.data(), k.size());
}

void stiffness_affine(std::span<const double> p, double k_min, double k_max, std::span<double> k) {
  check_sizes(p.size(), k.size());
  active().stiffness_affine(p.data(), k_min, k_max, k.data(), p.size());
}

double closure_residual(std::span<const double> k, std::span<const double> d) {
  check_sizes(k.size(), d.size());
  return active().closure_residual(k.data(), d.data(), k.size());
}

}  // namespace teleimp::kernels
