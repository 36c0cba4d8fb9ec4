// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "teleimp/protocol.hpp"
#include "teleimp/scenario.hpp"

namespace teleimp {

struct ServerOptions {
  std::string bind_address = "127.0.0.1";
  std::uint16_t ws_port = 8765;   // 0 picks a free port
  std::uint16_t tcp_port = 8766;  // newline-delimited JSON; 0 picks a free port
  bool enable_tcp = true;
  double telemetry_rate = 0.0;  // Hz, 0 keeps the scenario value
  std::optional<std::filesystem::path> log_dir;  // one episode file per engagement
  std::size_t queue_capacity = 256;
  /// Pace the simulation against the wall clock. When false it free-runs,
  /// which tests use to keep runs short.
  bool realtime = true;

  /// Bind address from TELEIMP_BIND when set.
  static ServerOptions from_environment();
};

/// Network front end: one WebSocket acceptor (plus an optional NDJSON TCP
/// acceptor), one operator at a time, a bounded command queue into the
/// simulation loop thread, and telemetry pushed back to the operator.
class Server {
 public:
  Server(Scenario scenario, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts the network and simulation threads.
  void start();
  /// Stops both threads and finalizes any open episode log. Idempotent.
  void stop();

  std::uint16_t ws_port() const noexcept;
  std::uint16_t tcp_port() const noexcept;

  /// Latest telemetry snapshot published by the simulation loop.
  std::optional<wire::Telemetry> latest_telemetry() const;
  std::uint64_t commands_applied() const noexcept;
  std::uint64_t commands_dropped() const noexcept;

  struct Impl;  // opaque; public only so the transport classes can reach it

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace teleimp
