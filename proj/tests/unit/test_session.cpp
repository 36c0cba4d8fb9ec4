// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include <doctest.h>

#include "helpers.hpp"
#include "teleimp/error.hpp"
#include "teleimp/session.hpp"

using namespace teleimp;
namespace fs = std::filesystem;

namespace {

struct Recorder {
  std::vector<wire::ServerMessage> messages;
  Session::Outbox outbox() {
    return [this](const wire::ServerMessage& m) { messages.push_back(m); };
  }
  std::vector<wire::ErrorReply> errors() const {
    std::vector<wire::ErrorReply> out;
    for (const auto& m : messages) {
      if (const auto* e = std::get_if<wire::ErrorReply>(&m)) out.push_back(*e);
    }
    return out;
  }
};

Scenario direct_scenario() {
  Scenario s = peg_in_hole_scenario();
  s.tracker.mode = TrackerMode::direct;
  return s;
}

void tick_n(Session& s, int n) {
  for (int i = 0; i < n; ++i) s.tick();
}

// Random operator: a wandering hand in view of the camera, random buttons.
OperatorScript random_script(std::mt19937_64& rng, double duration) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  OperatorScript s;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  for (double t = 0.0; t < duration; t += 0.02) {
    p += test::random_vec(rng, 0.004);
    p = p.cwiseMax(-0.1).cwiseMin(0.1);
    s.entries.push_back({t, wire::PoseSample{t, Pose(p, test::rot({0, 0, 1}, 10 * std::sin(3 * t)))}});
    const double r = u(rng);
    if (r < 0.05) s.entries.push_back({t, wire::Fsr{t, u(rng), u(rng)}});
    else if (r < 0.065) s.entries.push_back({t, wire::TeleopToggle{}});
    else if (r < 0.075) s.entries.push_back({t, wire::GripperToggle{}});
    else if (r < 0.08) s.entries.push_back({t, wire::ScaleSet{0.1 + 1.9 * u(rng)}});
  }
  return s;
}

}  // namespace

TEST_CASE("bundled script succeeds and the data files match the built-ins") {
  const Scenario sc = peg_in_hole_scenario();
  const OperatorScript script = make_peg_in_hole_script(sc);
  const RunResult r = run_script(script, sc, std::nullopt, true);
  CHECK(r.status == RunStatus::success);
  CHECK(r.final_status.success);
  CHECK(r.final_status.depth >= 0.100);
  CHECK(r.final_status.lateral_offset <= 0.003);
  CHECK(r.sim_time < 60.0);

  // the last telemetry announces success
  const wire::Telemetry* last = nullptr;
  for (const auto& m : r.outbox) {
    if (const auto* t = std::get_if<wire::Telemetry>(&m)) last = t;
  }
  REQUIRE(last);
  CHECK(last->success);
  CHECK(last->phase == "done");

  const fs::path data(TELEIMP_DATA_DIR);
  CHECK(scenario_to_json(load_scenario(data / "peg_in_hole.scenario.json")) == scenario_to_json(sc));
  CHECK(script_to_text(load_script(data / "peg_in_hole.script.ndjson")) == script_to_text(script));
}

TEST_CASE("empty script times out") {
  Scenario sc = peg_in_hole_scenario();
  sc.session.duration_cap = 3.0;
  const RunResult r = run_script(OperatorScript{}, sc);
  CHECK(r.status == RunStatus::timeout);
  CHECK_FALSE(r.final_status.success);
  CHECK(r.steps == 3000);
  CHECK(to_string(r.status) == "timeout");
}

TEST_CASE("same script and seed give byte-identical episode files") {
  const fs::path dir = test::scratch_dir("session_repeat");
  Scenario sc = peg_in_hole_scenario();
  sc.session.duration_cap = 6.0;
  const OperatorScript script = make_peg_in_hole_script(peg_in_hole_scenario());
  OperatorScript clipped;
  for (const auto& e : script.entries) {
    if (e.t <= sc.session.duration_cap) clipped.entries.push_back(e);
  }
  run_script(clipped, sc, dir / "a.ndjson");
  run_script(clipped, sc, dir / "b.ndjson");
  const std::string a = test::read_file(dir / "a.ndjson");
  CHECK(a.size() > 100000);
  CHECK(a == test::read_file(dir / "b.ndjson"));

  Scenario reseeded = sc;
  reseeded.session.seed = 8;
  run_script(clipped, reseeded, dir / "c.ndjson");
  CHECK(a != test::read_file(dir / "c.ndjson"));
}

TEST_CASE("script entries beyond the cap are refused") {
  Scenario sc = peg_in_hole_scenario();
  sc.session.duration_cap = 1.0;
  OperatorScript s;
  s.entries.push_back({2.0, wire::GripperToggle{}});
  CHECK_THROWS_AS(run_script(s, sc), Error);
}

TEST_CASE("script text format") {
  const OperatorScript s = parse_script(
      "{\"t\":0,\"msg\":{\"type\":\"teleop_toggle\"}}\n\n{\"t\":0.5,\"msg\":{\"type\":\"scale_set\",\"s\":0.5}}\n");
  REQUIRE(s.entries.size() == 2);
  CHECK(std::get<wire::ScaleSet>(s.entries[1].message).s == 0.5);
  CHECK(parse_script(script_to_text(s)).entries.size() == 2);
  CHECK_THROWS_WITH_AS(parse_script("{\"t\":1,\"msg\":{\"type\":\"gripper_toggle\"}}\n"
                                    "{\"t\":0.5,\"msg\":{\"type\":\"gripper_toggle\"}}\n"),
                       doctest::Contains("line 2"), Error);
  CHECK_THROWS_WITH_AS(parse_script("{\"t\":1,\"msg\":{\"type\":\"nope\"}}"), doctest::Contains("line 1"), Error);
  CHECK_THROWS_AS(load_script("/nonexistent.ndjson"), Error);
}

TEST_CASE("commands are applied in arrival order") {
  // sequence-numbered probe: two scale_set per step, each one distinct
  const fs::path dir = test::scratch_dir("session_order");
  Scenario sc = direct_scenario();
  sc.session.duration_cap = 0.6;
  OperatorScript probe;
  for (int k = 0; k < 1000; ++k) probe.entries.push_back({k * 0.0005, wire::ScaleSet{0.1 + 0.0015 * k}});
  run_script(probe, sc, dir / "probe.ndjson");
  const EpisodeFile f = read_episode(dir / "probe.ndjson");
  REQUIRE(f.records.size() == 600);
  int wrong = 0;
  for (std::size_t j = 0; j < f.records.size(); ++j) {
    const int last_k = std::min<int>(999, static_cast<int>(2 * j));
    wrong += f.records[j].scale != ScaleFactor(0.1 + 0.0015 * last_k).value();
  }
  CHECK(wrong == 0);
}

TEST_CASE("telemetry stays fresh and bars track the stiffness") {
  const Scenario sc = peg_in_hole_scenario();
  const RunResult r = run_script(make_peg_in_hole_script(sc), sc, std::nullopt, true);
  const double period = 1.0 / sc.session.telemetry_rate;
  double prev = -1.0;
  double worst_gap = 0.0, worst_age = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < r.outbox.size(); ++i) {
    if (const auto* t = std::get_if<wire::Telemetry>(&r.outbox[i])) {
      worst_age = std::max(worst_age, r.outbox_times[i] - t->t);
      if (prev >= 0.0) worst_gap = std::max(worst_gap, t->t - prev);
      prev = t->t;
      ++count;
      REQUIRE(i + 1 < r.outbox.size());
      const auto& bars = std::get<wire::Bars>(r.outbox[i + 1]);
      CHECK(bars.kt_frac == doctest::Approx(sc.impedance.kt_fraction(t->kt)).epsilon(1e-12));
      CHECK(bars.kr_frac >= 0.0);
      CHECK(bars.kr_frac <= 1.0);
    }
  }
  CHECK(count > 200);
  CHECK(worst_age <= 2 * period);
  CHECK(worst_gap <= 2 * period + 1e-9);
}

TEST_CASE("operator errors: no pose, stale pose, malformed frame") {
  Recorder rec;
  Session s(direct_scenario(), {}, rec.outbox());
  s.handle(wire::TeleopToggle{});
  REQUIRE(rec.errors().size() == 1);
  CHECK(rec.errors()[0].code == "no_pose");
  CHECK_FALSE(s.clutch().engaged);

  s.handle(wire::PoseSample{0.0, Pose()});
  tick_n(s, 600);  // > stale timeout without samples
  CHECK(s.leader_stale());
  s.handle(wire::TeleopToggle{});
  REQUIRE(rec.errors().size() == 2);
  CHECK(rec.errors()[1].code == "stale");
  CHECK_FALSE(s.clutch().engaged);

  s.handle_frame("{\"type\":\"fsr\",\"t\":1");
  REQUIRE(rec.errors().size() == 3);
  CHECK(rec.errors()[2].code == "parse");
  s.handle(wire::PoseSample{0.6, Pose()});
  s.handle_frame(R"({"type":"teleop_toggle"})");
  CHECK(s.clutch().engaged);
  CHECK(rec.errors().size() == 3);
}

TEST_CASE("clutching is bumpless and scale changes apply to later motion") {
  for (const TrackerMode mode : {TrackerMode::direct, TrackerMode::synthetic}) {
    Scenario sc = peg_in_hole_scenario();
    sc.tracker.mode = mode;
    Session s(sc, {});
    std::mt19937_64 rng(71);
    Eigen::Vector3d hand = Eigen::Vector3d::Zero();
    auto move = [&](double reach) {
      hand = test::random_vec(rng, reach);
      s.handle(wire::PoseSample{s.time(), Pose(hand, test::rot({0, 0, 1}, 20 * hand.x()))});
    };
    move(0.0);
    double worst = 0.0;
    for (int cycle = 0; cycle < 20; ++cycle) {
      const Pose before = s.goal();
      s.handle(wire::TeleopToggle{});
      REQUIRE(s.clutch().engaged);
      s.tick();
      worst = std::max({worst, test::pose_distance(s.goal(), before), test::rot_distance(s.goal(), before)});
      for (int k = 0; k < 30; ++k) {
        move(0.05);
        s.tick();
      }
      s.handle(wire::TeleopToggle{});
      const Pose frozen = s.goal();
      for (int k = 0; k < 30; ++k) {
        move(0.1);
        s.tick();
      }
      CHECK(s.goal() == frozen);
    }
    CHECK(worst <= 1e-9);
  }

  // scale_set while engaged: the goal does not jump, later motion is scaled
  Session s(direct_scenario(), {});
  s.handle(wire::PoseSample{0.0, Pose()});
  s.handle(wire::TeleopToggle{});
  s.handle(wire::PoseSample{0.0, Pose::from_translation(0.1, 0, 0)});
  s.tick();
  const Pose g1 = s.goal();
  CHECK((g1.position() - direct_scenario().scene.ee_start_pose.position()).norm() == doctest::Approx(0.1));
  s.handle(wire::ScaleSet{0.5});
  s.tick();
  CHECK(test::pose_distance(s.goal(), g1) < 1e-15);
  s.handle(wire::PoseSample{0.0, Pose::from_translation(0.3, 0, 0)});
  s.tick();
  CHECK((s.goal().position() - g1.position() - Eigen::Vector3d(0.1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("gripper and pressure commands reach the world") {
  Session s(direct_scenario(), {});
  s.handle(wire::Fsr{0.0, 1.0, 1.0});
  tick_n(s, 2000);
  CHECK(s.impedance().k_t == doctest::Approx(2000.0));
  CHECK(s.impedance().k_r == doctest::Approx(150.0));
  s.handle(wire::Fsr{0.0, 0.0, 0.0});
  s.tick();
  CHECK(s.impedance().k_t == doctest::Approx(2000.0 - 2.0));  // slewed, not jumped
  s.handle(wire::GripperToggle{});
  s.tick();
  CHECK(s.gripper() == GripperState::closed);
  CHECK(s.world().gripper == GripperState::closed);
  CHECK(s.messages_applied() == 3);
}

TEST_CASE("per-engagement logs start on engage and finalize on disengage") {
  const fs::path dir = test::scratch_dir("session_per_engagement");
  SessionOptions opts;
  opts.log_mode = LogMode::per_engagement;
  opts.log_path = dir;
  Session s(direct_scenario(), opts);
  s.handle(wire::PoseSample{0.0, Pose()});
  tick_n(s, 10);
  CHECK_FALSE(s.log_open());
  for (int round = 0; round < 2; ++round) {
    s.handle(wire::TeleopToggle{});
    CHECK(s.log_open());
    for (int k = 0; k < 200; ++k) {
      s.handle(wire::PoseSample{s.time(), Pose::from_translation(0.0002 * k, 0, 0)});
      s.tick();
    }
    s.handle(wire::TeleopToggle{});
    CHECK_FALSE(s.log_open());
    tick_n(s, 50);
  }
  REQUIRE(s.finalized_logs().size() == 2);
  CHECK(s.finalized_logs()[0].filename() == "episode-000000.ndjson");
  for (const auto& p : s.finalized_logs()) {
    CHECK(validate_episode(p).ok());
    CHECK(read_episode(p).records.size() == 200);
    CHECK(replay_episode(p).max_position_divergence < 1e-9);
  }
  CHECK(read_episode(s.finalized_logs()[0]).header.episode_id != read_episode(s.finalized_logs()[1]).header.episode_id);
}

TEST_CASE("100 randomized scripted episodes validate clean and replay exactly") {
  const fs::path dir = test::scratch_dir("session_random");
  std::mt19937_64 rng(72);
  Scenario sc = peg_in_hole_scenario();
  sc.session.duration_cap = 1.0;
  int dirty = 0, diverged = 0, engaged = 0;
  for (int i = 0; i < 100; ++i) {
    sc.session.seed = 1000 + i;
    const fs::path p = dir / ("r" + std::to_string(i) + ".ndjson");
    run_script(random_script(rng, sc.session.duration_cap), sc, p);
    dirty += !validate_episode(p).ok();
    diverged += !(replay_episode(p).max_position_divergence < 1e-9);
    const EpisodeFile f = read_episode(p);
    engaged += std::any_of(f.records.begin(), f.records.end(), [](const StepRecord& r) { return r.clutch_engaged; });
  }
  CHECK(dirty == 0);
  CHECK(diverged == 0);
  CHECK(engaged > 50);
}
