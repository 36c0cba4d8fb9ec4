// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include "teleimp/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "teleimp/digest.hpp"
#include "teleimp/error.hpp"
#include "teleimp/json_io.hpp"

namespace teleimp {

namespace {

// Reads optional keys out of one JSON object and rejects leftovers.
class ObjectReader {
 public:
  ObjectReader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw Error(Errc::config, "'" + path_ + "' must be an object");
  }

  template <class F>
  auto wrap(F&& f) {
    try {
      return f();
    } catch (const Error& e) {
      throw Error(Errc::config, e.what());
    }
  }

  const Json* get(const char* key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void num(const char* key, double& out) {
    if (const Json* v = get(key)) {
      if (!v->is_number()) throw Error(Errc::config, where(key) + " must be a number");
      out = v->get<double>();
    }
  }

  void integer(const char* key, int& out) {
    if (const Json* v = get(key)) {
      if (!v->is_number_integer()) throw Error(Errc::config, where(key) + " must be an integer");
      out = v->get<int>();
    }
  }

  void seed(const char* key, std::uint64_t& out) {
    if (const Json* v = get(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
        throw Error(Errc::config, where(key) + " must be a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  void vec3(const char* key, Eigen::Vector3d& out) {
    if (const Json* v = get(key)) out = wrap([&] { return parse_vec3(*v, where(key)); });
  }

  void pose(const char* key, Pose& out) {
    if (const Json* v = get(key)) out = wrap([&] { return parse_pose(*v, where(key)); });
  }

  void quat(const char* key, Eigen::Quaterniond& out) {
    if (const Json* v = get(key)) {
      const Pose p = wrap([&] {
        Json tmp{{"p", {0.0, 0.0, 0.0}}, {"q", *v}};
        return parse_pose(tmp, where(key));
      });
      out = p.orientation();
    }
  }

  ObjectReader child(const char* key) {
    static const Json kEmpty = Json::object();
    const Json* v = get(key);
    return ObjectReader(v ? *v : kEmpty, where(key));
  }

  bool has(const char* key) const { return obj_.contains(key); }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw Error(Errc::config, "unknown key " + where(it.key().c_str()));
    }
  }

 private:
  std::string where(const char* key) const { return "'" + (path_.empty() ? "" : path_ + ".") + key + "'"; }

  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

Pose default_camera_pose() {
  Eigen::Matrix3d r;
  // camera x = world y, camera y = world -z, optical axis = world -x
  r.col(0) = Eigen::Vector3d::UnitY();
  r.col(1) = -Eigen::Vector3d::UnitZ();
  r.col(2) = -Eigen::Vector3d::UnitX();
  return Pose(Eigen::Vector3d(0.6, 0.0, 0.110), Eigen::Quaterniond(r));
}

void Scenario::validate() const {
  scene.validate();
  impedance.validate();
  tracker.config.validate();
  if (!(teleop.f_sat > 0.0)) throw Error(Errc::config, "teleop.f_sat must be positive");
  if (!(teleop.scale >= ScaleFactor::kMin && teleop.scale <= ScaleFactor::kMax)) {
    throw Error(Errc::config, "teleop.scale must lie in [0.1, 2.0]");
  }
  if (!(session.telemetry_rate > 0.0)) throw Error(Errc::config, "telemetry_rate must be positive");
  if (!(session.duration_cap > 0.0)) throw Error(Errc::config, "duration_cap must be positive");
  if (session.log_decimation < 1 || session.flush_every < 1) {
    throw Error(Errc::config, "log.decimation and log.flush_every must be >= 1");
  }
  const NoiseSpec& n = tracker.noise;
  if (!(n.pos_sigma >= 0.0) || !(n.rot_sigma >= 0.0) || !(n.flip_probability >= 0.0 && n.flip_probability <= 1.0)) {
    throw Error(Errc::config, "tracker noise sigmas must be >= 0 and flip_probability in [0,1]");
  }
  if (!(tracker.cube_edge > 0.0)) throw Error(Errc::config, "tracker.cube_edge must be positive");
}

Scenario parse_scenario(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text.begin(), json_text.end());
  } catch (const Json::exception& e) {
    throw Error(Errc::config, std::string("scenario is not valid JSON: ") + e.what());
  }
  Scenario s;

  ObjectReader top(doc, "");
  top.num("dt", s.scene.dt);
  top.num("gravity", s.scene.gravity);
  top.num("table_height", s.scene.table_height);
  top.num("wrench_noise_sigma", s.scene.wrench_noise_sigma);
  top.seed("seed", s.session.seed);
  top.num("duration_cap", s.session.duration_cap);
  top.num("telemetry_rate", s.session.telemetry_rate);

  {
    ObjectReader ee = top.child("end_effector");
    ee.num("mass", s.scene.ee_mass);
    ee.num("rot_inertia", s.scene.ee_rot_inertia);
    ee.pose("start", s.scene.ee_start_pose);
    ee.num("grasp_radius", s.scene.grasp_radius);
    ee.finish();
  }
  {
    ObjectReader peg = top.child("peg");
    peg.vec3("dims", s.scene.peg_dims);
    peg.num("mass", s.scene.peg_mass);
    peg.pose("start", s.scene.peg_start_pose);
    peg.vec3("grasp_point", s.scene.grasp_point);
    peg.finish();
  }
  {
    ObjectReader hole = top.child("hole");
    hole.vec3("inner", s.scene.hole_inner);
    hole.num("wall", s.scene.hole_wall);
    hole.pose("pose", s.scene.hole_pose);
    hole.finish();
  }
  {
    ObjectReader c = top.child("contact");
    c.num("stiffness", s.scene.contact_stiffness);
    c.num("damping", s.scene.contact_damping);
    c.num("friction", s.scene.friction_mu);
    c.num("slip_velocity", s.scene.slip_velocity);
    c.finish();
  }
  {
    ObjectReader imp = top.child("impedance");
    imp.num("kt_min", s.impedance.k_t_min);
    imp.num("kt_max", s.impedance.k_t_max);
    imp.num("kr_min", s.impedance.k_r_min);
    imp.num("kr_max", s.impedance.k_r_max);
    imp.num("slew_t", s.impedance.slew_t);
    imp.num("slew_r", s.impedance.slew_r);
    imp.finish();
  }
  {
    ObjectReader t = top.child("teleop");
    t.num("scale", s.teleop.scale);
    t.num("f_sat", s.teleop.f_sat);
    t.quat("r_offset", s.teleop.r_offset);
    t.finish();
  }
  {
    ObjectReader tr = top.child("tracker");
    if (const Json* mode = tr.get("mode")) {
      if (*mode == "direct") {
        s.tracker.mode = TrackerMode::direct;
      } else if (*mode == "synthetic") {
        s.tracker.mode = TrackerMode::synthetic;
      } else {
        throw Error(Errc::config, "'tracker.mode' must be \"direct\" or \"synthetic\"");
      }
    }
    tr.pose("camera", s.tracker.config.camera_in_world);
    tr.num("alpha_thr", s.tracker.config.alpha_thr);
    tr.num("stale_timeout", s.tracker.config.stale_timeout);
    tr.num("cube_edge", s.tracker.cube_edge);
    tr.num("stem", s.tracker.stem);
    ObjectReader n = tr.child("noise");
    n.num("pos_sigma", s.tracker.noise.pos_sigma);
    n.num("rot_sigma", s.tracker.noise.rot_sigma);
    n.num("flip_probability", s.tracker.noise.flip_probability);
    if (const Json* band = n.get("flip_band")) {
      if (!band->is_array() || band->size() != 2 || !(*band)[0].is_number() || !(*band)[1].is_number()) {
        throw Error(Errc::config, "'tracker.noise.flip_band' must be [lo, hi]");
      }
      s.tracker.noise.flip_band_lo = (*band)[0].get<double>();
      s.tracker.noise.flip_band_hi = (*band)[1].get<double>();
    }
    n.finish();
    tr.finish();
  }
  {
    ObjectReader log = top.child("log");
    log.integer("decimation", s.session.log_decimation);
    log.integer("flush_every", s.session.flush_every);
    log.finish();
  }
  top.finish();
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& s) {
  const auto quat = [](JsonWriter& w, const Eigen::Quaterniond& q) {
    w.begin_array().value(q.w()).value(q.x()).value(q.y()).value(q.z()).end_array();
  };
  JsonWriter w;
  w.begin_object();
  w.key("contact").begin_object();
  w.key("damping").value(s.scene.contact_damping);
  w.key("friction").value(s.scene.friction_mu);
  w.key("slip_velocity").value(s.scene.slip_velocity);
  w.key("stiffness").value(s.scene.contact_stiffness);
  w.end_object();
  w.key("dt").value(s.scene.dt);
  w.key("duration_cap").value(s.session.duration_cap);
  w.key("end_effector").begin_object();
  w.key("grasp_radius").value(s.scene.grasp_radius);
  w.key("mass").value(s.scene.ee_mass);
  w.key("rot_inertia").value(s.scene.ee_rot_inertia);
  w.key("start").pose(s.scene.ee_start_pose);
  w.end_object();
  w.key("gravity").value(s.scene.gravity);
  w.key("hole").begin_object();
  w.key("inner").vec(s.scene.hole_inner);
  w.key("pose").pose(s.scene.hole_pose);
  w.key("wall").value(s.scene.hole_wall);
  w.end_object();
  w.key("impedance").begin_object();
  w.key("kr_max").value(s.impedance.k_r_max);
  w.key("kr_min").value(s.impedance.k_r_min);
  w.key("kt_max").value(s.impedance.k_t_max);
  w.key("kt_min").value(s.impedance.k_t_min);
  w.key("slew_r").value(s.impedance.slew_r);
  w.key("slew_t").value(s.impedance.slew_t);
  w.end_object();
  w.key("log").begin_object();
  w.key("decimation").value(s.session.log_decimation);
  w.key("flush_every").value(s.session.flush_every);
  w.end_object();
  w.key("peg").begin_object();
  w.key("dims").vec(s.scene.peg_dims);
  w.key("grasp_point").vec(s.scene.grasp_point);
  w.key("mass").value(s.scene.peg_mass);
  w.key("start").pose(s.scene.peg_start_pose);
  w.end_object();
  w.key("seed").value(s.session.seed);
  w.key("table_height").value(s.scene.table_height);
  w.key("telemetry_rate").value(s.session.telemetry_rate);
  w.key("teleop").begin_object();
  w.key("f_sat").value(s.teleop.f_sat);
  w.key("r_offset");
  quat(w, s.teleop.r_offset);
  w.key("scale").value(s.teleop.scale);
  w.end_object();
  w.key("tracker").begin_object();
  w.key("alpha_thr").value(s.tracker.config.alpha_thr);
  w.key("camera").pose(s.tracker.config.camera_in_world);
  w.key("cube_edge").value(s.tracker.cube_edge);
  w.key("mode").value(s.tracker.mode == TrackerMode::direct ? "direct" : "synthetic");
  w.key("noise").begin_object();
  w.key("flip_band").begin_array().value(s.tracker.noise.flip_band_lo).value(s.tracker.noise.flip_band_hi).end_array();
  w.key("flip_probability").value(s.tracker.noise.flip_probability);
  w.key("pos_sigma").value(s.tracker.noise.pos_sigma);
  w.key("rot_sigma").value(s.tracker.noise.rot_sigma);
  w.end_object();
  w.key("stale_timeout").value(s.tracker.config.stale_timeout);
  w.key("stem").value(s.tracker.stem);
  w.end_object();
  w.key("wrench_noise_sigma").value(s.scene.wrench_noise_sigma);
  w.end_object();
  return w.take();
}

std::string scenario_digest(const Scenario& s) { return sha256_hex(scenario_to_json(s)); }

}  // namespace teleimp
