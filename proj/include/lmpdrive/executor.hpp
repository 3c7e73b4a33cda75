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

#ifndef LMPDRIVE__EXECUTOR_HPP_
#define LMPDRIVE__EXECUTOR_HPP_

#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include "lmpdrive/lmp.hpp"
#include "lmpdrive/sim.hpp"

namespace lmpdrive
{

enum class EngageTransition { kNone, kEngaged, kDisengaged };

std::string to_string(EngageTransition t);

struct AppliedChange
{
  FollowerConfig previous;
  FollowerConfig next;
  EngageTransition engage_transition{EngageTransition::kNone};
  double applied_at{0.0};
};

struct NoAction
{
  std::string reason;
};

using ApplyResult = std::variant<AppliedChange, NoAction>;

/// km/h -> m/s. The only place LMP units become simulator units.
TrackingConfig to_tracking(const FollowerConfig & cfg);

/// An accepted program waiting for the next step boundary.
struct PendingApplication
{
  std::uint64_t flow_id{0};
  Lmp lmp;
  Verdict verdict;
  double request_time{0.0};
};

struct ExecutedApplication
{
  std::uint64_t flow_id{0};
  ApplyResult result;
};

/// Applies gate-approved programs to the world between steps.
class Executor
{
public:
  explicit Executor(FollowerConfig initial) : current_(initial) {}

  const FollowerConfig & current() const { return current_; }
  void reset(FollowerConfig initial) { current_ = initial; }

  /// Accepted programs replace the tracking config in a single assignment.
  /// Anything else returns NoAction and leaves `world` untouched.
  ApplyResult apply(const Lmp & lmp, const Verdict & verdict, WorldState & world);

  /// Producer side; may be called from any thread.
  void submit(PendingApplication pending);
  /// Sim-owner side; applies everything queued, in submission order.
  std::vector<ExecutedApplication> drain(WorldState & world);

private:
  FollowerConfig current_;
  std::mutex queue_mutex_;
  std::deque<PendingApplication> queue_;
};

}  // namespace lmpdrive

#endif  // LMPDRIVE__EXECUTOR_HPP_
