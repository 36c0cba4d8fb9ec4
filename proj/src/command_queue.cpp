// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include "teleimp/command_queue.hpp"

#include <algorithm>

namespace teleimp {

namespace {
bool is_pose(const QueuedCommand& c) {
  return !c.disconnect && std::holds_alternative<wire::PoseSample>(c.message);
}
}  // namespace

void CommandQueue::push(QueuedCommand cmd) {
  std::lock_guard lock(mutex_);
  if (items_.size() >= capacity_) {
    auto oldest = std::find_if(items_.begin(), items_.end(), is_pose);
    if (oldest != items_.end()) {
      items_.erase(oldest);
      ++dropped_;
    } else if (is_pose(cmd)) {
      ++dropped_;
      return;
    }
  }
  items_.push_back(std::move(cmd));
}

void CommandQueue::drain(std::vector<QueuedCommand>& out) {
  std::lock_guard lock(mutex_);
  std::move(items_.begin(), items_.end(), std::back_inserter(out));
  items_.clear();
}

std::size_t CommandQueue::size() const {
  std::lock_guard lock(mutex_);
  return items_.size();
}

std::uint64_t CommandQueue::dropped() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

}  // namespace teleimp
