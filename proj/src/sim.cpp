// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include "teleimp/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "teleimp/error.hpp"
#include "teleimp/rng.hpp"

namespace teleimp {

namespace {

constexpr double kConsistencyTolerance = 0.00075;  // m of allowed penalty penetration
constexpr double kPhaseInsertDepth = 0.010;
constexpr double kPhaseAlignDistance = 0.150;
constexpr double kSuccessDepth = 0.100;
constexpr double kSuccessAxisDeg = 5.0;

struct Box {
  Eigen::Vector3d lo;
  Eigen::Vector3d hi;
};

// Fixture solids in the hole frame.
std::array<Box, 5> fixture_boxes(const SceneConfig& s) {
  const double ix = 0.5 * s.hole_inner.x();
  const double iy = 0.5 * s.hole_inner.y();
  const double d = s.hole_inner.z();
  const double w = s.hole_wall;
  const double bottom = -d - w;
  return {{
      {{ix, -iy - w, bottom}, {ix + w, iy + w, 0.0}},
      {{-ix - w, -iy - w, bottom}, {-ix, iy + w, 0.0}},
      {{-ix, iy, bottom}, {ix, iy + w, 0.0}},
      {{-ix, -iy - w, bottom}, {ix, -iy, 0.0}},
      {{-ix, -iy, bottom}, {ix, iy, -d}},
  }};
}

// Smallest push-out of a point inside a box: depth and outward normal (box frame).
bool box_penetration(const Box& b, const Eigen::Vector3d& x, double& depth, Eigen::Vector3d& normal) {
  for (int i = 0; i < 3; ++i) {
    if (!(x[i] > b.lo[i] && x[i] < b.hi[i])) return false;
  }
  depth = 1e300;
  for (int i = 0; i < 3; ++i) {
    const double to_lo = x[i] - b.lo[i];
    const double to_hi = b.hi[i] - x[i];
    if (to_lo < depth) {
      depth = to_lo;
      normal = -Eigen::Vector3d::Unit(i);
    }
    if (to_hi < depth) {
      depth = to_hi;
      normal = Eigen::Vector3d::Unit(i);
    }
  }
  return true;
}

Eigen::Vector3d peg_body_inertia(const SceneConfig& s) {
  const double m = s.peg_mass / 12.0;
  const Eigen::Vector3d& d = s.peg_dims;
  return {m * (d.y() * d.y() + d.z() * d.z()), m * (d.x() * d.x() + d.z() * d.z()),
          m * (d.x() * d.x() + d.y() * d.y())};
}

Eigen::Quaterniond integrate_orientation(const Eigen::Quaterniond& q, const Eigen::Vector3d& omega,
                                         double dt) {
  return (quat_from_rotvec(omega * dt) * q).normalized();
}

void require_finite(const Eigen::Vector3d& v, const char* what) {
  if (!v.allFinite()) throw Error(Errc::sim_diverged, std::string(what) + " is not finite");
}

void require_finite(const Eigen::Quaterniond& q, const char* what) {
  if (!q.coeffs().allFinite()) throw Error(Errc::sim_diverged, std::string(what) + " is not finite");
}

Eigen::Vector3d gravity_vector(const SceneConfig& s) { return {0.0, 0.0, -s.gravity}; }

// Payload gravity + contact, expressed about the end-effector origin.
Wrench payload_wrench(const World& w) {
  Wrench out;
  if (!w.grasped) return out;
  const Eigen::Vector3d r = w.peg.pose.position() - w.ee.pose.position();
  const ContactResult contact = contact_wrench(w.peg, w.scene);
  const Eigen::Vector3d f = contact.wrench.force + w.scene.peg_mass * gravity_vector(w.scene);
  out.force = f;
  out.torque = contact.wrench.torque + r.cross(f);
  return out;
}

void sync_grasped_peg(World& w) {
  w.peg.pose = compose(w.ee.pose, w.grasp_offset);
  const Eigen::Vector3d r = w.peg.pose.position() - w.ee.pose.position();
  w.peg.twist.linear = w.ee.twist.linear + w.ee.twist.angular.cross(r);
  w.peg.twist.angular = w.ee.twist.angular;
}

}  // namespace

void SceneConfig::validate() const {
  if ((peg_dims.array() <= 0.0).any()) throw Error(Errc::config, "peg dimensions must be positive");
  if (!(hole_inner.x() > peg_dims.x() && hole_inner.y() > peg_dims.y())) {
    throw Error(Errc::config, "hole cross-section must exceed the peg cross-section");
  }
  if (!(hole_inner.z() > 0.0) || !(hole_wall > 0.0)) throw Error(Errc::config, "hole depth and wall must be positive");
  if (!(peg_mass > 0.0) || !(ee_mass > 0.0) || !(ee_rot_inertia > 0.0)) {
    throw Error(Errc::config, "masses and inertia must be positive");
  }
  if (!(contact_stiffness >= 0.0) || !(contact_damping >= 0.0) || !(friction_mu >= 0.0) ||
      !(slip_velocity > 0.0)) {
    throw Error(Errc::config, "contact constants must be non-negative (slip_velocity positive)");
  }
  if (!(dt > 0.0)) throw Error(Errc::config, "dt must be positive");
  if (!(grasp_radius > 0.0)) throw Error(Errc::config, "grasp_radius must be positive");
  if (!(wrench_noise_sigma >= 0.0)) throw Error(Errc::config, "wrench_noise_sigma must be non-negative");
}

double SceneConfig::half_clearance() const {
  return 0.5 * std::min(hole_inner.x() - peg_dims.x(), hole_inner.y() - peg_dims.y());
}

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::reach: return "reach";
    case Phase::transport: return "transport";
    case Phase::align: return "align";
    case Phase::insert: return "insert";
    case Phase::done: return "done";
  }
  return "reach";
}

Phase phase_from_string(std::string_view s) {
  for (Phase p : {Phase::reach, Phase::transport, Phase::align, Phase::insert, Phase::done}) {
    if (to_string(p) == s) return p;
  }
  throw Error(Errc::parse, "unknown phase '" + std::string(s) + "'");
}

World make_world(const SceneConfig& scene, std::uint64_t seed) {
  scene.validate();
  World w;
  w.scene = scene;
  w.seed = seed;
  w.ee.pose = scene.ee_start_pose;
  w.ee.mass = scene.ee_mass;
  w.ee.rot_inertia = scene.ee_rot_inertia;
  w.peg.pose = scene.peg_start_pose;
  w.peg.mass = scene.peg_mass;
  w.peg.rot_inertia = peg_body_inertia(scene).maxCoeff();
  return w;
}

Wrench impedance_wrench(const Pose& goal, const BodyState& ee, const ImpedanceCommand& impedance) {
  const Vector6d& k = impedance.k_diag;
  const Vector6d& d = impedance.d_diag;
  const Eigen::Vector3d dx = goal.position() - ee.pose.position();
  const Eigen::Vector3d dtheta = orientation_error(goal.orientation(), ee.pose.orientation());
  Wrench w;
  w.force = k.head<3>().cwiseProduct(dx) - d.head<3>().cwiseProduct(ee.twist.linear);
  w.torque = k.tail<3>().cwiseProduct(dtheta) - d.tail<3>().cwiseProduct(ee.twist.angular);
  return w;
}

ContactResult contact_wrench(const BodyState& peg, const SceneConfig& scene) {
  ContactResult out;
  const Eigen::Vector3d half = 0.5 * scene.peg_dims;
  const Eigen::Vector3d& com = peg.pose.position();
  const Pose world_to_hole = invert(scene.hole_pose);
  const Eigen::Matrix3d hole_rot = scene.hole_pose.rotation();
  const auto boxes = fixture_boxes(scene);
  const double fx = 0.5 * scene.hole_inner.x() + scene.hole_wall;
  const double fy = 0.5 * scene.hole_inner.y() + scene.hole_wall;

  auto apply = [&](const Eigen::Vector3d& x, const Eigen::Vector3d& n, double depth) {
    const Eigen::Vector3d r = x - com;
    const Eigen::Vector3d v = peg.twist.linear + peg.twist.angular.cross(r);
    const double vn = v.dot(n);
    const double fn = scene.contact_stiffness * depth + scene.contact_damping * std::max(0.0, -vn);
    const Eigen::Vector3d vt = v - vn * n;
    const double slip = std::sqrt(vt.squaredNorm() + scene.slip_velocity * scene.slip_velocity);
    const Eigen::Vector3d f = fn * n - (scene.friction_mu * fn / slip) * vt;
    out.wrench.force += f;
    out.wrench.torque += r.cross(f);
    out.points.push_back({x, n, depth, f});
  };

  for (int c = 0; c < 8; ++c) {
    const Eigen::Vector3d corner((c & 1) ? half.x() : -half.x(), (c & 2) ? half.y() : -half.y(),
                                 (c & 4) ? half.z() : -half.z());
    const Eigen::Vector3d x = peg.pose.apply(corner);
    const Eigen::Vector3d xh = world_to_hole.apply(x);
    const bool over_fixture = std::abs(xh.x()) < fx && std::abs(xh.y()) < fy;
    if (over_fixture) {
      for (const Box& b : boxes) {
        double depth = 0.0;
        Eigen::Vector3d n;
        if (box_penetration(b, xh, depth, n)) {
          apply(x, hole_rot * n, depth);
          break;
        }
      }
    } else if (x.z() < scene.table_height) {
      apply(x, Eigen::Vector3d::UnitZ(), scene.table_height - x.z());
    }
  }
  return out;
}

void step_in_place(World& w, const SimCommand& cmd, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::domain, "step needs dt > 0");
  const SceneConfig& s = w.scene;

  if (cmd.gripper != w.gripper) {
    if (cmd.gripper == GripperState::closed) {
      const Eigen::Vector3d grasp_point = w.peg.pose.apply(s.grasp_point);
      if ((grasp_point - w.ee.pose.position()).norm() <= s.grasp_radius) {
        w.grasped = true;
        w.grasp_offset = compose(invert(w.ee.pose), w.peg.pose);
        sync_grasped_peg(w);
      }
    } else if (w.grasped) {
      w.grasped = false;
    }
    w.gripper = cmd.gripper;
  }

  const Wrench control = impedance_wrench(cmd.goal, w.ee, cmd.impedance);
  if (w.grasped) {
    const Wrench load = payload_wrench(w);
    const Eigen::Vector3d r = w.peg.pose.position() - w.ee.pose.position();
    const double mass = s.ee_mass + s.peg_mass;
    const double inertia =
        s.ee_rot_inertia + peg_body_inertia(s).maxCoeff() + s.peg_mass * r.squaredNorm();
    w.ee.twist.linear += dt * (control.force + load.force) / mass;
    w.ee.twist.angular += dt * (control.torque + load.torque) / inertia;
    w.ee.pose = Pose(w.ee.pose.position() + dt * w.ee.twist.linear,
                     integrate_orientation(w.ee.pose.orientation(), w.ee.twist.angular, dt));
    sync_grasped_peg(w);
  } else {
    w.ee.twist.linear += dt * control.force / s.ee_mass;
    w.ee.twist.angular += dt * control.torque / s.ee_rot_inertia;
    w.ee.pose = Pose(w.ee.pose.position() + dt * w.ee.twist.linear,
                     integrate_orientation(w.ee.pose.orientation(), w.ee.twist.angular, dt));

    const ContactResult contact = contact_wrench(w.peg, s);
    const Eigen::Vector3d force = contact.wrench.force + s.peg_mass * gravity_vector(s);
    const Eigen::Matrix3d rot = w.peg.pose.rotation();
    const Eigen::Matrix3d inertia_world = rot * peg_body_inertia(s).asDiagonal() * rot.transpose();
    const Eigen::Vector3d& omega = w.peg.twist.angular;
    const Eigen::Vector3d alpha =
        inertia_world.ldlt().solve(contact.wrench.torque - omega.cross(inertia_world * omega));
    w.peg.twist.linear += dt * force / s.peg_mass;
    w.peg.twist.angular += dt * alpha;
    w.peg.pose = Pose(w.peg.pose.position() + dt * w.peg.twist.linear,
                      integrate_orientation(w.peg.pose.orientation(), w.peg.twist.angular, dt));
  }

  ++w.step_index;
  w.t = static_cast<double>(w.step_index) * dt;

  require_finite(w.ee.twist.linear, "ee.twist.linear");
  require_finite(w.ee.twist.angular, "ee.twist.angular");
  require_finite(w.ee.pose.position(), "ee.pose.position");
  require_finite(w.ee.pose.orientation(), "ee.pose.orientation");
  require_finite(w.peg.twist.linear, "peg.twist.linear");
  require_finite(w.peg.twist.angular, "peg.twist.angular");
  require_finite(w.peg.pose.position(), "peg.pose.position");
  require_finite(w.peg.pose.orientation(), "peg.pose.orientation");
}

World step(World world, const SimCommand& cmd, double dt) {
  step_in_place(world, cmd, dt);
  return world;
}

Wrench estimate_external_wrench(const World& w) {
  Wrench out = payload_wrench(w);
  const double sigma = w.scene.wrench_noise_sigma;
  if (sigma > 0.0) {
    constexpr std::uint64_t kWrenchSalt = 3;
    NoiseSource noise(stream_seed(w.seed, w.step_index, kWrenchSalt));
    for (int i = 0; i < 3; ++i) out.force[i] += sigma * noise.gaussian();
    for (int i = 0; i < 3; ++i) out.torque[i] += sigma * noise.gaussian();
  }
  return out;
}

EpisodeStatus check_success(const World& w) {
  const SceneConfig& s = w.scene;
  EpisodeStatus st;
  st.t = w.t;

  const Pose peg_in_hole = compose(invert(s.hole_pose), w.peg.pose);
  const Eigen::Vector3d axis = peg_in_hole.rotation().col(2);
  const Eigen::Vector3d& center = peg_in_hole.position();
  // whichever end points down is the bottom
  const Eigen::Vector3d down_axis = axis.z() >= 0.0 ? axis : Eigen::Vector3d(-axis);
  const Eigen::Vector3d bottom = center - 0.5 * s.peg_dims.z() * down_axis;

  st.axis_angle = std::acos(std::clamp(std::abs(axis.z()), 0.0, 1.0));
  // square hole: offsets are per axis (Chebyshev), which is what the
  // clearance bounds
  st.lateral_offset = center.head<2>().cwiseAbs().maxCoeff();
  st.distance_to_mouth = bottom.norm();
  // depth only means something above the fixture; elsewhere the peg rests on
  // the table below the mouth plane
  const bool over_fixture = std::abs(bottom.x()) <= 0.5 * s.hole_inner.x() + s.hole_wall &&
                            std::abs(bottom.y()) <= 0.5 * s.hole_inner.y() + s.hole_wall;
  st.depth = over_fixture ? -bottom.z() : std::min(0.0, -bottom.z());

  const double bottom_offset = bottom.head<2>().cwiseAbs().maxCoeff();
  if (st.depth >= kPhaseInsertDepth && bottom_offset > s.half_clearance() + kConsistencyTolerance) {
    st.consistent = false;
  }

  st.success = st.consistent && st.depth >= kSuccessDepth && st.lateral_offset <= s.half_clearance() &&
               st.axis_angle <= kSuccessAxisDeg * std::numbers::pi / 180.0;

  if (st.success) {
    st.phase = Phase::done;
  } else if (!w.grasped) {
    st.phase = Phase::reach;
  } else if (st.depth >= kPhaseInsertDepth) {
    st.phase = Phase::insert;
  } else if (st.distance_to_mouth > kPhaseAlignDistance) {
    st.phase = Phase::transport;
  } else {
    st.phase = Phase::align;
  }
  return st;
}

namespace {

void write_twist(JsonWriter& w, const Twist& t) {
  w.begin_object().key("v").vec(t.linear).key("w").vec(t.angular).end_object();
}

Twist read_twist(const Json& doc, std::string_view name) {
  Twist t;
  t.linear = parse_vec3(require_field(doc, "v"), std::string(name) + ".v");
  t.angular = parse_vec3(require_field(doc, "w"), std::string(name) + ".w");
  return t;
}

}  // namespace

void write_world_state(JsonWriter& w, const World& world) {
  w.begin_object();
  w.key("step").value(world.step_index);
  w.key("t").value(world.t);
  w.key("ee").pose(world.ee.pose);
  w.key("ee_twist");
  write_twist(w, world.ee.twist);
  w.key("peg").pose(world.peg.pose);
  w.key("peg_twist");
  write_twist(w, world.peg.twist);
  w.key("gripper").value(world.gripper == GripperState::closed ? "closed" : "open");
  w.key("grasped").value(world.grasped);
  w.key("grasp_offset").pose(world.grasp_offset);
  w.end_object();
}

void read_world_state(const Json& doc, World& world) {
  const Json& step = require_field(doc, "step");
  if (!step.is_number_unsigned() && !step.is_number_integer()) throw Error(Errc::parse, "field 'step' must be an integer");
  world.step_index = step.get<std::uint64_t>();
  world.t = require_number(doc, "t");
  world.ee.pose = parse_pose(require_field(doc, "ee"), "ee");
  world.ee.twist = read_twist(require_field(doc, "ee_twist"), "ee_twist");
  world.peg.pose = parse_pose(require_field(doc, "peg"), "peg");
  world.peg.twist = read_twist(require_field(doc, "peg_twist"), "peg_twist");
  const Json& g = require_field(doc, "gripper");
  if (!g.is_string() || (g != "open" && g != "closed")) throw Error(Errc::parse, "field 'gripper' must be open|closed");
  world.gripper = g == "closed" ? GripperState::closed : GripperState::open;
  const Json& grasped = require_field(doc, "grasped");
  if (!grasped.is_boolean()) throw Error(Errc::parse, "field 'grasped' must be boolean");
  world.grasped = grasped.get<bool>();
  world.grasp_offset = parse_pose(require_field(doc, "grasp_offset"), "grasp_offset");
}

}  // namespace teleimp
