// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <vector>

#include "teleimp/protocol.hpp"

namespace teleimp {

struct QueuedCommand {
  wire::ClientMessage message;
  std::uint64_t connection = 0;
  bool disconnect = false;  // connection closed; no message
};

/// Bounded FIFO between network readers and the simulation loop. When full,
/// the oldest pose sample is dropped (samples supersede each other); other
/// messages are never dropped, so the bound is soft for them.
class CommandQueue {
 public:
  explicit CommandQueue(std::size_t capacity = 256) : capacity_(capacity == 0 ? 1 : capacity) {}

  void push(QueuedCommand cmd);
  /// Moves everything queued so far into `out` (appending), in order.
  void drain(std::vector<QueuedCommand>& out);

  std::size_t size() const;
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t dropped() const;

 private:
  mutable std::mutex mutex_;
  std::deque<QueuedCommand> items_;
  std::size_t capacity_;
  std::uint64_t dropped_ = 0;
};

}  // namespace teleimp
