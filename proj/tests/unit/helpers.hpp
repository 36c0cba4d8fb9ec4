// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "teleimp/se3.hpp"

namespace teleimp::test {

inline Eigen::Quaterniond random_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized();
}

inline Eigen::Vector3d random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline Pose random_pose(std::mt19937_64& rng, double scale = 1.0) {
  return Pose(random_vec(rng, scale), random_quat(rng));
}

inline double pose_distance(const Pose& a, const Pose& b) {
  return (a.position() - b.position()).norm();
}

inline double rot_distance(const Pose& a, const Pose& b) {
  return geodesic_angle(a.orientation(), b.orientation());
}

inline Eigen::Quaterniond rot(const Eigen::Vector3d& axis, double deg) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(deg * M_PI / 180.0, axis.normalized()));
}

// Sign-invariant quaternion chordal cost.
inline double chordal_cost(const Eigen::Quaterniond& q, const std::vector<Eigen::Quaterniond>& qs,
                           const std::vector<double>& w) {
  double c = 0.0;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const double a = (q.coeffs() - qs[i].coeffs()).squaredNorm();
    const double b = (q.coeffs() + qs[i].coeffs()).squaredNorm();
    c += w[i] * std::min(a, b);
  }
  return c;
}

// Dense grid over the whole rotation-vector ball around the first input,
// then pattern-search refinement down to 1e-11 rad steps.
inline Eigen::Quaterniond brute_force_mean(const std::vector<Eigen::Quaterniond>& qs, const std::vector<double>& w) {
  const Eigen::Quaterniond seed = qs.front();
  auto at = [&](const Eigen::Vector3d& v) { return (quat_from_rotvec(v) * seed).normalized(); };
  Eigen::Vector3d best = Eigen::Vector3d::Zero();
  double best_cost = chordal_cost(seed, qs, w);
  const double span = M_PI;
  const int n = 36;
  for (int i = -n; i <= n; ++i) {
    for (int j = -n; j <= n; ++j) {
      for (int k = -n; k <= n; ++k) {
        const Eigen::Vector3d v = Eigen::Vector3d(i, j, k) * (span / n);
        const double c = chordal_cost(at(v), qs, w);
        if (c < best_cost) {
          best_cost = c;
          best = v;
        }
      }
    }
  }
  double step = span / n;
  while (step > 1e-11) {
    bool improved = false;
    for (int axis = 0; axis < 3; ++axis) {
      for (double sgn : {-1.0, 1.0}) {
        Eigen::Vector3d v = best;
        v[axis] += sgn * step;
        const double c = chordal_cost(at(v), qs, w);
        if (c < best_cost) {
          best_cost = c;
          best = v;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return at(best);
}

/// Fresh scratch directory under the build tree's temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("teleimp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << body;
}

}  // namespace teleimp::test
