// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "teleimp/error.hpp"
#include "teleimp/server.hpp"
#include "teleimp/session.hpp"
#include "teleimp/session_log.hpp"

using namespace teleimp;

namespace {

Scenario scenario_or_default(const std::string& path) {
  return path.empty() ? peg_in_hole_scenario() : load_scenario(path);
}

int cmd_serve(const std::string& scenario_path, std::uint16_t port, std::uint16_t tcp_port, double rate,
              const std::string& log_dir) {
  ServerOptions opts = ServerOptions::from_environment();
  opts.ws_port = port;
  opts.tcp_port = tcp_port;
  opts.telemetry_rate = rate;
  if (!log_dir.empty()) opts.log_dir = log_dir;

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);  // inherited by the server threads

  Server server(scenario_or_default(scenario_path), opts);
  server.start();
  std::printf("listening ws://%s:%u  ndjson tcp %s:%u\n", opts.bind_address.c_str(), server.ws_port(),
              opts.bind_address.c_str(), server.tcp_port());
  std::fflush(stdout);
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  return 0;
}

int cmd_script(const std::string& scenario_path, const std::string& script_path, const std::string& out) {
  const Scenario scenario = scenario_or_default(scenario_path);
  const OperatorScript script =
      script_path.empty() ? make_peg_in_hole_script(scenario) : load_script(script_path);
  const RunResult r =
      run_script(script, scenario, out.empty() ? std::nullopt : std::optional(std::filesystem::path(out)), true);
  for (std::size_t i = 0; i < r.outbox.size(); ++i) {
    if (const auto* e = std::get_if<wire::ErrorReply>(&r.outbox[i])) {
      std::fprintf(stderr, "t=%.3f error{%s}: %s\n", r.outbox_times[i], e->code.c_str(), e->detail.c_str());
    }
  }
  const EpisodeStatus& st = r.final_status;
  std::printf("%s t=%.3f depth=%.4f offset=%.4f axis=%.3fdeg phase=%s\n", std::string(to_string(r.status)).c_str(),
              r.sim_time, st.depth, st.lateral_offset, st.axis_angle * 180.0 / 3.141592653589793,
              std::string(to_string(st.phase)).c_str());
  return r.status == RunStatus::success ? 0 : 1;
}

int cmd_replay(const std::string& file, const std::string& scenario_path, bool force) {
  std::optional<Scenario> override_scenario;
  if (!scenario_path.empty()) override_scenario = load_scenario(scenario_path);
  const ReplayReport r = replay_episode(file, override_scenario ? &*override_scenario : nullptr, force);
  for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("steps=%zu max_position_divergence=%.3e m max_orientation_divergence=%.3e rad\n", r.steps,
              r.max_position_divergence, r.max_orientation_divergence);
  return r.max_position_divergence < 1e-9 && !r.truncated ? 0 : 1;
}

int cmd_validate(const std::string& file) {
  const ValidationReport r = validate_episode(file);
  for (const auto& v : r.violations) std::printf("line %zu: %s\n", v.line, v.what.c_str());
  std::printf("%zu records, %zu violations\n", r.records, r.violations.size());
  return r.ok() ? 0 : 1;
}

int cmd_check_reqs(const std::string& file, const RequirementThresholds& th) {
  const RequirementReport r = check_requirements(std::filesystem::path(file), th);
  for (const auto& q : r.requirements) {
    std::printf("%d %-50s %-12s samples=%zu mean_kt=%.1f mean_kr=%.1f\n", q.id, q.name.c_str(),
                std::string(to_string(q.status)).c_str(), q.samples, q.mean_kt, q.mean_kr);
  }
  return r.all_satisfied() ? 0 : 1;
}

int cmd_make_script(const std::string& scenario_path, const std::string& out, const std::string& scenario_out) {
  const Scenario scenario = scenario_or_default(scenario_path);
  const std::string text = script_to_text(make_peg_in_hole_script(scenario));
  auto write = [](const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::io, "cannot write " + path);
    f << body;
  };
  if (out.empty()) {
    std::cout << text;
  } else {
    write(out, text);
  }
  if (!scenario_out.empty()) write(scenario_out, scenario_to_json(scenario) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"teleimp: tele-impedance teleoperation server, scripted operator and episode tools"};
  app.require_subcommand(1);

  std::string scenario, script, out, file, log_dir, scenario_out;
  std::uint16_t port = 8765, tcp_port = 8766;
  double rate = 20.0;
  bool force = false;
  RequirementThresholds th;

  auto* serve = app.add_subcommand("serve", "serve the operator protocol over WebSocket and NDJSON/TCP");
  serve->add_option("--port", port, "WebSocket port (0 = any)");
  serve->add_option("--tcp-port", tcp_port, "NDJSON TCP port (0 = any)");
  serve->add_option("--scenario", scenario, "scenario file")->check(CLI::ExistingFile);
  serve->add_option("--rate", rate, "telemetry rate, Hz")->check(CLI::PositiveNumber);
  serve->add_option("--log-dir", log_dir, "directory for per-engagement episode files");

  auto* run = app.add_subcommand("script", "run an operator script headless");
  run->add_option("--scenario", scenario, "scenario file (default: bundled)")->check(CLI::ExistingFile);
  run->add_option("--script", script, "operator script (default: bundled)")->check(CLI::ExistingFile);
  run->add_option("--out", out, "episode file to write");

  auto* replay = app.add_subcommand("replay", "re-simulate an episode and report divergence");
  replay->add_option("--file", file, "episode file")->required()->check(CLI::ExistingFile);
  replay->add_option("--scenario", scenario, "scenario to replay against")->check(CLI::ExistingFile);
  replay->add_flag("--force", force, "replay despite a scenario digest mismatch");

  auto* validate = app.add_subcommand("validate", "check an episode file");
  validate->add_option("--file", file, "episode file")->required()->check(CLI::ExistingFile);

  auto* reqs = app.add_subcommand("check-reqs", "check the per-phase impedance requirements");
  reqs->add_option("--file", file, "episode file")->required()->check(CLI::ExistingFile);
  reqs->add_option("--kt-low", th.kt_low, "N/m");
  reqs->add_option("--kt-high", th.kt_high, "N/m");
  reqs->add_option("--kr-low", th.kr_low, "N m/rad");

  auto* make = app.add_subcommand("make-script", "write the bundled peg-in-hole script");
  make->add_option("--scenario", scenario, "scenario file (default: bundled)")->check(CLI::ExistingFile);
  make->add_option("--out", out, "script file (default: stdout)");
  make->add_option("--scenario-out", scenario_out, "also write the scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;  // --help is not an error
  }
  try {
    if (*serve) return cmd_serve(scenario, port, tcp_port, rate, log_dir);
    if (*run) return cmd_script(scenario, script, out);
    if (*replay) return cmd_replay(file, scenario, force);
    if (*validate) return cmd_validate(file);
    if (*reqs) return cmd_check_reqs(file, th);
    if (*make) return cmd_make_script(scenario, out, scenario_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
