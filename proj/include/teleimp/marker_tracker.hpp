// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "teleimp/se3.hpp"

namespace teleimp {

/// One detected fiducial face: its pose in the camera frame.
struct MarkerObservation {
  int marker_id = 0;
  Pose pose_camera;  // camera -> marker
  double timestamp = 0.0;
};

/// Constant marker -> interface transforms of the marker polyhedron.
struct PolyhedronGeometry {
  std::map<int, Pose> face_transforms;  // marker_id -> (marker -> interface)

  std::size_t n() const noexcept { return face_transforms.size(); }

  /// Markers on the five exposed faces of a cube (ids 1..5 = +x,-x,+y,-y,+z)
  /// centered `stem` above the interface origin along its z-axis. Marker
  /// z-axes point out of the faces.
  static PolyhedronGeometry default_cube(double edge = 0.060, double stem = 0.110);
};

struct TrackerConfig {
  Pose camera_in_world;
  double alpha_thr = kDefaultAlphaThreshold;
  double stale_timeout = 0.5;  // s

  /// cos(50 deg): faces seen more than 50 deg off their normal are dropped.
  static const double kDefaultAlphaThreshold;

  void validate() const;
};

struct TrackedPose {
  Pose pose_world;
  double weight_sum = 0.0;
  int n_used = 0;
  bool stale = false;
  double timestamp = 0.0;
};

struct NoiseSpec {
  double pos_sigma = 0.0;         // m, per axis
  double rot_sigma = 0.0;         // rad, per axis of the rotation vector
  double flip_probability = 0.0;  // [0,1]
  double flip_band_lo = 0.0;      // flips hit faces whose observed alpha is in (lo, hi]
  double flip_band_hi = 0.0;
};

/// Cosine between the line of sight and the reversed face normal. Unclamped,
/// in [-1, 1]. Throws Errc::degenerate_observation for a zero-length position.
double cosine_weight(const MarkerObservation& obs);

/// camera_in_world * pose_camera * face_transform.
Pose marker_world_estimate(const MarkerObservation& obs, const PolyhedronGeometry& geom,
                           const TrackerConfig& cfg);

/// Threshold-gated, cosine-weighted fusion. Returns nullopt when no face
/// passes the gate.
std::optional<TrackedPose> fuse(std::span<const MarkerObservation> observations,
                                const PolyhedronGeometry& geom, const TrackerConfig& cfg);

/// Holds the last fused pose across dropouts and flags it stale after
/// cfg.stale_timeout. Single owner.
class MarkerTracker {
 public:
  MarkerTracker(PolyhedronGeometry geom, TrackerConfig cfg);

  /// Throws Errc::no_pose_yet if nothing has ever been fused, and
  /// Errc::domain if `now` goes backwards.
  TrackedPose step(std::span<const MarkerObservation> observations, double now);

  const std::optional<TrackedPose>& last() const noexcept { return last_; }
  const PolyhedronGeometry& geometry() const noexcept { return geom_; }
  const TrackerConfig& config() const noexcept { return cfg_; }

 private:
  PolyhedronGeometry geom_;
  TrackerConfig cfg_;
  std::optional<TrackedPose> last_;
  double last_now_ = -1e300;
};

/// Synthetic camera + detector. Emits one observation per face whose true
/// alpha is positive, perturbed by Gaussian noise; faces whose noisy alpha is
/// inside the flip band may additionally receive the planar two-fold
/// ambiguity (180 deg about the view ray). Noise and flip draws come from separate per-face streams, so a
/// flip/no-flip pair with one seed shares its noise.
std::vector<MarkerObservation> synth_observe(const Pose& true_interface_pose,
                                             const PolyhedronGeometry& geom,
                                             const TrackerConfig& cfg, const NoiseSpec& noise,
                                             std::uint64_t seed, double timestamp = 0.0);

/// `{"t":...,"id":...,"p":[...],"q":[...]}`
std::string observation_to_line(const MarkerObservation& obs);
MarkerObservation observation_from_line(std::string_view line);

}  // namespace teleimp
