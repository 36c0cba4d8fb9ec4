// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
//
// Headless acceptance suite: one [PASS]/[FAIL] line per criterion, exit
// status 0 only if every criterion passes.
#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <cstdio>
#include <functional>
#include <thread>

#include "helpers.hpp"
#include "teleimp/error.hpp"
#include "teleimp/impedance.hpp"
#include "teleimp/marker_tracker.hpp"
#include "teleimp/protocol.hpp"
#include "teleimp/server.hpp"
#include "teleimp/session.hpp"

using namespace teleimp;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const char* name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  failures += !o.pass;
  std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

TrackerConfig camera() { return TrackerConfig{default_camera_pose()}; }

// Interface poses in view of the default camera (see the tracker unit tests).
Pose visible_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> yaw(-70.0, 70.0), tilt(0.0, 10.0);
  const auto g = PolyhedronGeometry::default_cube();
  for (;;) {
    const Pose p(test::random_vec(rng, 0.08),
                 test::rot(Eigen::Vector3d::UnitZ(), yaw(rng)) * test::rot(test::random_vec(rng), tilt(rng)));
    if (fuse(synth_observe(p, g, camera(), {}, 0), g, camera())) return p;
  }
}

fs::path data_dir() { return TELEIMP_DATA_DIR; }

Scenario bundled_scenario() { return load_scenario(data_dir() / "peg_in_hole.scenario.json"); }
OperatorScript bundled_script() { return load_script(data_dir() / "peg_in_hole.script.ndjson"); }

// The session loop of run_script, but without stopping at success.
World run_until(const OperatorScript& script, const Scenario& sc, double t_end) {
  Session s(sc, {});
  std::size_t next = 0;
  const auto steps = static_cast<std::uint64_t>(std::llround(t_end / sc.scene.dt));
  while (s.step_index() < steps) {
    while (next < script.entries.size() && script.entries[next].t <= s.time() + 1e-9) s.handle(script.entries[next++].message);
    s.tick();
  }
  return s.world();
}

// ---------------------------------------------------------------------------

Outcome damping_closure() {
  const ImpedanceProfile prof;
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ut(prof.k_t_min, prof.k_t_max), ur(prof.k_r_min, prof.k_r_max);
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    Vector6d k;
    k << ut(rng), ut(rng), ut(rng), ur(rng), ur(rng), ur(rng);
    const Vector6d d = damping_from_stiffness(k);
    for (int j = 0; j < 6; ++j) worst = std::max(worst, std::abs(d[j] - 2.0 * 0.707 * std::sqrt(k[j])));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 5.0, fmt("1e6 vectors, max |d - 1.414 sqrt(k)| = %.3g, %.2f s", worst, secs)};
}

Outcome fusion_round_trip() {
  const auto g = PolyhedronGeometry::default_cube();
  std::mt19937_64 rng(102);
  std::vector<Pose> truths;
  for (int i = 0; i < 200; ++i) truths.push_back(visible_pose(rng));
  const auto t0 = Clock::now();
  double worst_p = 0.0, worst_r = 0.0;
  int missing = 0;
  for (const Pose& truth : truths) {
    const auto f = fuse(synth_observe(truth, g, camera(), {}, 0), g, camera());
    if (!f) {
      ++missing;
      continue;
    }
    worst_p = std::max(worst_p, test::pose_distance(f->pose_world, truth));
    worst_r = std::max(worst_r, test::rot_distance(f->pose_world, truth));
  }
  const double secs = seconds_since(t0);
  return {missing == 0 && worst_p <= 1e-9 && worst_r <= 1e-9 && secs < 5.0,
          fmt("200 poses, max error %.3g m / %.3g rad, %.3f s", worst_p, worst_r, secs)};
}

Outcome gating() {
  const auto g = PolyhedronGeometry::default_cube();
  TrackerConfig cfg = camera();
  std::mt19937_64 rng(103);
  NoiseSpec noise;
  noise.pos_sigma = 0.001;
  noise.rot_sigma = 0.5 * M_PI / 180;
  int runs = 0, differ = 0, injected = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto obs = synth_observe(visible_pose(rng), g, cfg, noise, i);
    std::vector<MarkerObservation> kept, polluted = obs;
    for (const auto& o : obs) {
      if (cosine_weight(o) > cfg.alpha_thr) kept.push_back(o);
    }
    // extra garbage detections of every face, each at or below the gate
    for (const auto& [id, _] : g.face_transforms) {
      for (;;) {
        MarkerObservation o{id, Pose(Eigen::Vector3d(0, 0, 0.6) + test::random_vec(rng, 0.2), test::random_quat(rng)), 0.0};
        if (cosine_weight(o) <= cfg.alpha_thr) {
          polluted.insert(polluted.begin() + static_cast<long>(rng() % (polluted.size() + 1)), o);
          ++injected;
          break;
        }
      }
    }
    const auto a = fuse(kept, g, cfg), b = fuse(obs, g, cfg), c = fuse(polluted, g, cfg);
    ++runs;
    const bool same = a.has_value() == b.has_value() && a.has_value() == c.has_value() &&
                      (!a || (a->pose_world == b->pose_world && a->pose_world == c->pose_world));
    differ += !same;
  }
  return {differ == 0, fmt("%d paired runs, %d injected sub-threshold detections, %d differing outputs (bitwise)",
                           runs, injected, differ)};
}

Outcome noise_robustness() {
  const auto g = PolyhedronGeometry::default_cube();
  const TrackerConfig cfg = camera();
  NoiseSpec noise;
  noise.pos_sigma = 0.001;               // m per axis, per face
  noise.rot_sigma = 0.5 * M_PI / 180.0;  // rad per axis, per face
  NoiseSpec flipped = noise;
  flipped.flip_probability = 1.0;
  flipped.flip_band_lo = 0.0;
  flipped.flip_band_hi = cfg.alpha_thr;
  std::mt19937_64 rng(104);
  double sq = 0.0;
  int n = 0, flip_diff = 0, flips = 0, faces_used = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Pose truth = visible_pose(rng);
    const auto obs = synth_observe(truth, g, cfg, noise, seed);
    const auto f = fuse(obs, g, cfg);
    if (!f) continue;
    sq += (f->pose_world.position() - truth.position()).squaredNorm();
    faces_used += f->n_used;
    ++n;
    const auto obs_flip = synth_observe(truth, g, cfg, flipped, seed);
    for (std::size_t j = 0; j < obs.size(); ++j) flips += !(obs[j].pose_camera == obs_flip[j].pose_camera);
    const auto ff = fuse(obs_flip, g, cfg);
    flip_diff += !(ff && ff->pose_world == f->pose_world);
  }
  const double rmse = std::sqrt(sq / n);
  return {n == 1000 && rmse < 0.001 && flip_diff == 0 && flips > 0,
          fmt("1000 seeds, %.2f faces fused on average, position RMSE %.3f mm (limit 1 mm); %d flipped "
              "sub-threshold faces, %d paired-run differences",
              double(faces_used) / n, rmse * 1e3, flips, flip_diff)};
}

Outcome rotation_mean() {
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> uw(0.05, 1.0), ang(0.0, 60.0);
  double worst = 0.0;
  const int trials = 60;
  for (int trial = 0; trial < trials; ++trial) {
    const Eigen::Quaterniond center = test::random_quat(rng);
    const int n = 1 + trial % 4;
    std::vector<Eigen::Quaterniond> qs;
    std::vector<Pose> poses;
    std::vector<double> w;
    for (int i = 0; i < n; ++i) {
      Eigen::Quaterniond q = (test::rot(test::random_vec(rng), ang(rng)) * center).normalized();
      if (rng() & 1) q.coeffs() = -q.coeffs();
      qs.push_back(q);
      poses.emplace_back(test::random_vec(rng), q);
      w.push_back(uw(rng));
    }
    const Eigen::Quaterniond mean = weighted_pose_mean(poses, w).orientation();
    worst = std::max(worst, geodesic_angle(mean, test::brute_force_mean(qs, w)));
  }
  return {worst < 1e-6, fmt("%d sets of 1-4 quaternions within 60 deg of a center, max geodesic gap %.3g rad", trials, worst)};
}

Outcome spring_sag() {
  std::string detail;
  bool ok = true;
  for (const double kt : {100.0, 2000.0}) {
    SceneConfig s;
    s.peg_start_pose = Pose::from_translation(0.0, -0.4, 0.6);
    s.ee_start_pose = Pose::from_translation(0.0, -0.4, 0.65);
    World w = make_world(s, 1);
    const SimCommand cmd{w.ee.pose, expand(kt, 150.0, ImpedanceProfile{}), GripperState::closed};
    for (int i = 0; i < 15000; ++i) step_in_place(w, cmd, s.dt);
    if (!w.grasped) return {false, "peg was not grasped"};
    const double sag = cmd.goal.position().z() - w.ee.pose.position().z();
    const double expect = s.peg_mass * s.gravity / kt;
    const double rel = std::abs(sag - expect) / expect;
    ok = ok && rel < 0.02;
    detail += fmt("k_t=%g: sag %.5f m vs m*g/k %.5f m (%.3f%%); ", kt, sag, expect, 100 * rel);
  }
  return {ok, detail};
}

Outcome scripted_peg_in_hole() {
  const Scenario sc = bundled_scenario();
  const OperatorScript script = bundled_script();
  const fs::path out = test::scratch_dir("acceptance_script") / "episode.ndjson";
  const auto t0 = Clock::now();
  const RunResult r = run_script(script, sc, out);
  const double wall = seconds_since(t0);
  const RequirementReport req = check_requirements(out);
  const EpisodeStatus& st = r.final_status;
  const bool ok = r.status == RunStatus::success && st.depth >= 0.100 && st.lateral_offset <= 0.003 &&
                  st.axis_angle <= 5.0 * M_PI / 180.0 && r.sim_time < 60.0 && wall < 30.0 && req.all_satisfied();
  std::string reqs;
  for (const auto& q : req.requirements) {
    reqs += fmt("%d:%s(kt %.0f kr %.0f) ", q.id, std::string(to_string(q.status)).c_str(), q.mean_kt, q.mean_kr);
  }
  return {ok, fmt("%s at %.3f s sim / %.2f s wall; depth %.1f mm, offset %.2f mm, axis %.2f deg; requirements %s",
                  std::string(to_string(r.status)).c_str(), r.sim_time, wall, st.depth * 1e3, st.lateral_offset * 1e3,
                  st.axis_angle * 180 / M_PI, reqs.c_str())};
}

Outcome determinism_and_replay() {
  const Scenario sc = bundled_scenario();
  const OperatorScript script = bundled_script();
  const fs::path dir = test::scratch_dir("acceptance_determinism");
  run_script(script, sc, dir / "a.ndjson");
  run_script(script, sc, dir / "b.ndjson");
  const bool identical = test::read_file(dir / "a.ndjson") == test::read_file(dir / "b.ndjson");
  const ReplayReport rep = replay_episode(dir / "a.ndjson");

  const double t_end = script.entries.back().t;
  Scenario fine = sc;
  fine.scene.dt = 0.5 * sc.scene.dt;
  const World coarse_w = run_until(script, sc, t_end);
  const World fine_w = run_until(script, fine, t_end);
  const double dt_gap = (coarse_w.peg.pose.position() - fine_w.peg.pose.position()).norm();
  return {identical && rep.max_position_divergence < 1e-9 && dt_gap < 0.001,
          fmt("episodes %s; replay divergence %.3g m / %.3g rad over %zu steps; final peg pose moves %.3f mm when dt "
              "is halved (t=%.1f s)",
              identical ? "byte-identical" : "DIFFER", rep.max_position_divergence, rep.max_orientation_divergence,
              rep.steps, dt_gap * 1e3, t_end)};
}

Outcome bumpless_clutch() {
  std::mt19937_64 rng(106);
  double worst = 0.0;
  int engagements = 0;
  for (const TrackerMode mode : {TrackerMode::direct, TrackerMode::synthetic}) {
    for (int run = 0; run < 10; ++run) {
      Scenario sc = bundled_scenario();
      sc.tracker.mode = mode;
      sc.session.seed = 500 + run;
      Session s(sc, {});
      const double scale = 0.1 + 1.9 * (run / 9.0);
      s.handle(wire::ScaleSet{scale});
      auto move = [&](double reach) {
        s.handle(wire::PoseSample{s.time(), Pose(test::random_vec(rng, reach), test::rot(test::random_vec(rng), 15.0))});
      };
      move(0.0);
      std::uniform_int_distribution<int> len(1, 60);
      for (int cycle = 0; cycle < 25; ++cycle) {
        const Pose before = s.goal();
        s.handle(wire::TeleopToggle{});
        if (!s.clutch().engaged) return {false, "engagement refused"};
        s.tick();
        ++engagements;
        worst = std::max(worst, test::pose_distance(s.goal(), before));
        for (int k = len(rng); k > 0; --k) {
          if (k % 3 == 0) s.handle(wire::ScaleSet{0.1 + 1.9 * (rng() % 100) / 99.0});
          move(0.06);
          s.tick();
        }
        s.handle(wire::TeleopToggle{});
        for (int k = len(rng); k > 0; --k) {
          move(0.1);
          s.tick();
        }
      }
    }
  }
  return {worst <= 1e-9, fmt("%d engagements (direct and tracked leader), max goal jump %.3g m", engagements, worst)};
}

Outcome protocol() {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int mismatches = 0;
  for (int i = 0; i < 100000; ++i) {
    wire::ClientMessage m;
    switch (i % 5) {
      case 0: m = wire::PoseSample{1e3 * u01(rng), test::random_pose(rng, 2.0)}; break;
      case 1: m = wire::Fsr{1e3 * u01(rng), u01(rng), u01(rng)}; break;
      case 2: m = wire::GripperToggle{}; break;
      case 3: m = wire::TeleopToggle{}; break;
      default: m = wire::ScaleSet{0.1 + 1.9 * u01(rng)}; break;
    }
    const std::string frame = wire::encode(m);
    const wire::DecodedClient d = wire::decode_client(frame);
    mismatches += !(d.message == m) || wire::encode(d.message) != frame;
  }

  // fuzz a live server over both transports
  namespace asio = boost::asio;
  namespace websocket = boost::beast::websocket;
  using tcp = asio::ip::tcp;
  ServerOptions o;
  o.ws_port = 0;
  o.tcp_port = 0;
  Scenario sc = bundled_scenario();
  sc.tracker.mode = TrackerMode::direct;
  Server server(sc, o);
  server.start();
  const std::string valid = wire::encode(wire::ClientMessage{wire::PoseSample{0.0, Pose()}});
  auto mutate = [&] {
    std::string f = valid;
    for (int e = 1 + rng() % 4; e > 0 && !f.empty(); --e) {
      if (rng() & 1) f[rng() % f.size()] = static_cast<char>(1 + rng() % 255);
      else f.erase(rng() % f.size(), 1 + rng() % 8);
    }
    for (char& c : f) c = c == '\n' ? ' ' : c;
    return f;
  };
  int frames = 0;
  asio::io_context ioc;
  {
    websocket::stream<tcp::socket> ws(ioc);
    ws.next_layer().connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), server.ws_port()));
    ws.handshake("127.0.0.1", "/");
    ws.text(false);  // binary frames with arbitrary bytes too
    for (int i = 0; i < 2000; ++i, ++frames) ws.write(asio::buffer(mutate()));
    ws.close(websocket::close_code::normal);
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  bool alive = false;
  {
    tcp::socket sock(ioc);
    sock.connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), server.tcp_port()));
    for (int i = 0; i < 2000; ++i, ++frames) asio::write(sock, asio::buffer(mutate() + "\n"));
    asio::write(sock, asio::buffer(std::string(R"({"type":"gripper_toggle"})") + "\n"));
    // the server still answers: read until a telemetry frame arrives
    std::string buf;
    for (int i = 0; i < 10000 && !alive; ++i) {
      const std::size_t n = asio::read_until(sock, asio::dynamic_buffer(buf), '\n');
      const std::string line = buf.substr(0, n - 1);
      buf.erase(0, n);
      alive = line.find("\"telemetry\"") != std::string::npos;
    }
  }
  server.stop();
  return {mismatches == 0 && alive,
          fmt("1e5 random messages, %d round-trip mismatches; %d fuzzed frames, server %s", mismatches, frames,
              alive ? "still serving" : "NOT serving")};
}

}  // namespace

int main() {
  criterion("damping closure", damping_closure);
  criterion("fusion round trip", fusion_round_trip);
  criterion("gating", gating);
  criterion("noise robustness", noise_robustness);
  criterion("rotation mean oracle", rotation_mean);
  criterion("spring sag", spring_sag);
  criterion("scripted peg-in-hole", scripted_peg_in_hole);
  criterion("determinism and replay", determinism_and_replay);
  criterion("bumpless clutch", bumpless_clutch);
  criterion("protocol", protocol);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
