// Copyright 2026 The lmpdrive Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lmpdrive/executor.hpp"

namespace lmpdrive
{

std::string to_string(EngageTransition t)
{
  switch (t) {
    case EngageTransition::kEngaged:
      return "engaged";
    case EngageTransition::kDisengaged:
      return "disengaged";
    case EngageTransition::kNone:
      break;
  }
  return "none";
}

TrackingConfig to_tracking(const FollowerConfig & cfg)
{
  TrackingConfig t;
  t.target_speed = cfg.target_velocity / kKmhPerMps;
  t.lookahead_distance = cfg.lookahead_distance;
  t.lookahead_ratio = cfg.lookahead_ratio;
  t.param_flag = cfg.param_flag;
  return t;
}

ApplyResult Executor::apply(const Lmp & lmp, const Verdict & verdict, WorldState & world)
{
  if (!verdict.accepted()) {
    return NoAction{to_string(verdict.outcome) + (verdict.detail.empty() ? "" : ": " + verdict.detail)};
  }
  AppliedChange change;
  change.previous = current_;
  change.applied_at = world.time;
  FollowerConfig next = current_;
  if (lmp.follower) {
    next.target_velocity = lmp.follower->target_velocity;
    next.param_flag = lmp.follower->param_flag;
    // param_flag 0 changes the velocity only and keeps the current lookahead tuning.
    if (lmp.follower->param_flag != 0) {
      next.lookahead_distance = lmp.follower->lookahead_distance;
      next.lookahead_ratio = lmp.follower->lookahead_ratio;
    }
  }
  if (lmp.engage) {
    if (*lmp.engage && !world.engaged) {
      change.engage_transition = EngageTransition::kEngaged;
    } else if (!*lmp.engage && world.engaged) {
      change.engage_transition = EngageTransition::kDisengaged;
    }
    world.engaged = *lmp.engage;
    if (*lmp.engage) {
      world.route_finished = false;
    }
  }
  world.tracking = to_tracking(next);
  current_ = next;
  change.next = next;
  return change;
}

void Executor::submit(PendingApplication pending)
{
  std::lock_guard<std::mutex> lock(queue_mutex_);
  queue_.push_back(std::move(pending));
}

std::vector<ExecutedApplication> Executor::drain(WorldState & world)
{
  std::deque<PendingApplication> batch;
  {
    std::lock_guard<std::mutex> lock(queue_mutex_);
    batch.swap(queue_);
  }
  std::vector<ExecutedApplication> out;
  out.reserve(batch.size());
  for (auto & p : batch) {
    out.push_back({p.flow_id, apply(p.lmp, p.verdict, world)});
  }
  return out;
}

}  // namespace lmpdrive
