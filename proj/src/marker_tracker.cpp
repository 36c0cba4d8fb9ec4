// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include "teleimp/marker_tracker.hpp"

#include <cmath>
#include <numbers>

#include "teleimp/error.hpp"
#include "teleimp/json_io.hpp"
#include "teleimp/rng.hpp"

namespace teleimp {

const double TrackerConfig::kDefaultAlphaThreshold = std::cos(50.0 * std::numbers::pi / 180.0);

void TrackerConfig::validate() const {
  if (!(alpha_thr > 0.0 && alpha_thr < 1.0)) throw Error(Errc::config, "alpha_thr must lie in (0,1)");
  if (!(stale_timeout >= 0.0)) throw Error(Errc::config, "stale_timeout must be non-negative");
}

PolyhedronGeometry PolyhedronGeometry::default_cube(double edge, double stem) {
  using Eigen::Vector3d;
  const double half = 0.5 * edge;
  const double quarter = 0.5 * std::numbers::pi;
  struct Face {
    int id;
    Vector3d normal;
    Eigen::Quaterniond orientation;  // maps marker z onto the face normal
  };
  const Face faces[] = {
      {1, Vector3d::UnitX(), Eigen::Quaterniond(Eigen::AngleAxisd(quarter, Vector3d::UnitY()))},
      {2, -Vector3d::UnitX(), Eigen::Quaterniond(Eigen::AngleAxisd(-quarter, Vector3d::UnitY()))},
      {3, Vector3d::UnitY(), Eigen::Quaterniond(Eigen::AngleAxisd(-quarter, Vector3d::UnitX()))},
      {4, -Vector3d::UnitY(), Eigen::Quaterniond(Eigen::AngleAxisd(quarter, Vector3d::UnitX()))},
      {5, Vector3d::UnitZ(), Eigen::Quaterniond::Identity()},
  };
  PolyhedronGeometry geom;
  const Vector3d center(0.0, 0.0, stem);
  for (const Face& f : faces) {
    const Pose interface_to_marker(center + half * f.normal, f.orientation);
    geom.face_transforms.emplace(f.id, invert(interface_to_marker));
  }
  return geom;
}

double cosine_weight(const MarkerObservation& obs) {
  const Eigen::Vector3d& p = obs.pose_camera.position();
  const double pn = p.norm();
  if (!(pn > 0.0)) throw Error(Errc::degenerate_observation, "marker position at camera origin");
  const Eigen::Vector3d ez = obs.pose_camera.rotation().col(2);
  return -ez.dot(p) / (ez.norm() * pn);
}

Pose marker_world_estimate(const MarkerObservation& obs, const PolyhedronGeometry& geom,
                           const TrackerConfig& cfg) {
  const auto it = geom.face_transforms.find(obs.marker_id);
  if (it == geom.face_transforms.end()) {
    throw Error(Errc::unknown_marker, "marker id " + std::to_string(obs.marker_id));
  }
  return compose(cfg.camera_in_world, compose(obs.pose_camera, it->second));
}

std::optional<TrackedPose> fuse(std::span<const MarkerObservation> observations,
                                const PolyhedronGeometry& geom, const TrackerConfig& cfg) {
  std::vector<Pose> estimates;
  std::vector<double> weights;
  estimates.reserve(observations.size());
  weights.reserve(observations.size());
  double timestamp = 0.0;
  for (const MarkerObservation& obs : observations) {
    const double alpha = cosine_weight(obs);
    if (!(alpha > cfg.alpha_thr)) continue;
    estimates.push_back(marker_world_estimate(obs, geom, cfg));
    weights.push_back(alpha);
    timestamp = obs.timestamp;
  }
  if (estimates.empty()) return std::nullopt;

  TrackedPose out;
  out.n_used = static_cast<int>(estimates.size());
  for (const double w : weights) out.weight_sum += w;
  out.pose_world = estimates.size() == 1 ? estimates.front() : weighted_pose_mean(estimates, weights);
  out.timestamp = timestamp;
  return out;
}

MarkerTracker::MarkerTracker(PolyhedronGeometry geom, TrackerConfig cfg)
    : geom_(std::move(geom)), cfg_(cfg) {
  cfg_.validate();
  if (geom_.n() == 0) throw Error(Errc::config, "polyhedron needs at least one marker face");
}

TrackedPose MarkerTracker::step(std::span<const MarkerObservation> observations, double now) {
  if (now < last_now_) throw Error(Errc::domain, "tracker time went backwards");
  last_now_ = now;
  if (auto fused = fuse(observations, geom_, cfg_)) {
    fused->timestamp = now;
    fused->stale = false;
    last_ = *fused;
    return *fused;
  }
  if (!last_) throw Error(Errc::no_pose_yet, "no interface pose has been fused yet");
  TrackedPose held = *last_;
  held.stale = now - last_->timestamp > cfg_.stale_timeout;
  return held;
}

std::vector<MarkerObservation> synth_observe(const Pose& true_interface_pose,
                                             const PolyhedronGeometry& geom,
                                             const TrackerConfig& cfg, const NoiseSpec& noise,
                                             std::uint64_t seed, double timestamp) {
  constexpr std::uint64_t kNoiseSalt = 1;
  constexpr std::uint64_t kFlipSalt = 2;
  const Pose world_to_camera = invert(cfg.camera_in_world);
  const Pose camera_to_interface = compose(world_to_camera, true_interface_pose);

  std::vector<MarkerObservation> out;
  for (const auto& [id, marker_to_interface] : geom.face_transforms) {
    MarkerObservation obs;
    obs.marker_id = id;
    obs.timestamp = timestamp;
    obs.pose_camera = compose(camera_to_interface, invert(marker_to_interface));
    const double alpha = cosine_weight(obs);
    if (!(alpha > 0.0)) continue;

    const auto face = static_cast<std::uint64_t>(id);
    NoiseSource gauss(stream_seed(seed, face, kNoiseSalt));
    if (noise.pos_sigma > 0.0 || noise.rot_sigma > 0.0) {
      Eigen::Vector3d dp, dr;
      for (int i = 0; i < 3; ++i) dp[i] = noise.pos_sigma * gauss.gaussian();
      for (int i = 0; i < 3; ++i) dr[i] = noise.rot_sigma * gauss.gaussian();
      obs.pose_camera = Pose(obs.pose_camera.position() + dp,
                             quat_from_rotvec(dr) * obs.pose_camera.orientation());
    }

    // the band applies to the face as detected, so a flip never changes
    // which side of the gate a face falls on
    const double seen_alpha = cosine_weight(obs);
    NoiseSource coin(stream_seed(seed, face, kFlipSalt));
    const bool in_band = seen_alpha > noise.flip_band_lo && seen_alpha <= noise.flip_band_hi;
    if (in_band && coin.uniform() < noise.flip_probability) {
      const Eigen::Vector3d ray = obs.pose_camera.position().normalized();
      const Eigen::Quaterniond half_turn(0.0, ray.x(), ray.y(), ray.z());
      obs.pose_camera.set_orientation(half_turn * obs.pose_camera.orientation());
    }
    out.push_back(obs);
  }
  return out;
}

std::string observation_to_line(const MarkerObservation& obs) {
  const Eigen::Quaterniond& q = obs.pose_camera.orientation();
  JsonWriter w;
  w.begin_object();
  w.key("t").value(obs.timestamp);
  w.key("id").value(obs.marker_id);
  w.key("p").vec(obs.pose_camera.position());
  w.key("q").begin_array().value(q.w()).value(q.x()).value(q.y()).value(q.z()).end_array();
  w.end_object();
  return w.take();
}

MarkerObservation observation_from_line(std::string_view line) {
  const Json doc = parse_json_text(line, "observation");
  MarkerObservation obs;
  obs.timestamp = require_number(doc, "t");
  const Json& id = require_field(doc, "id");
  if (!id.is_number_integer()) throw Error(Errc::parse, "field 'id' must be an integer");
  obs.marker_id = id.get<int>();
  obs.pose_camera = parse_pose(doc, "observation");
  return obs;
}

}  // namespace teleimp
