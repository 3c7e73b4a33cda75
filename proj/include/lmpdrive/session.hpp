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

#ifndef LMPDRIVE__SESSION_HPP_
#define LMPDRIVE__SESSION_HPP_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "lmpdrive/context.hpp"
#include "lmpdrive/executor.hpp"
#include "lmpdrive/gateway.hpp"
#include "lmpdrive/lmp.hpp"
#include "lmpdrive/memory_store.hpp"
#include "lmpdrive/metrics.hpp"
#include "lmpdrive/prompt.hpp"
#include "lmpdrive/sim.hpp"
#include "lmpdrive/trajectory_log.hpp"

namespace lmpdrive
{

enum class SessionState { kIdle, kAwaitingLlm, kExecuting, kDegraded };

std::string to_string(SessionState state);

enum class UtteranceKind { kCommand, kEvaluate, kUnrecognized };

std::string to_string(UtteranceKind kind);

struct UtteranceEvent
{
  std::string text;
  UtteranceKind kind{UtteranceKind::kUnrecognized};
  std::string payload;  ///< text after the trigger word
  double received_at{0.0};
};

/// Case-insensitive trigger words "command" / "evaluate" as the first word.
UtteranceEvent route_utterance(const std::string & text, double received_at);

/// How model answers line up with simulated time.
enum class ClockMode {
  /// The call runs inline and its answer lands `virtual_llm_latency` sim-seconds later. Reproducible.
  kVirtual,
  /// The call runs on a worker thread; the answer lands at the first step boundary after it returns.
  kRealtime,
};

struct SessionConfig
{
  std::string session_id;
  std::string driver_id{"default"};
  std::shared_ptr<const Scenario> scenario;
  std::uint64_t seed{0};
  BackendConfig backend;
  bool memory_enabled{true};
  std::size_t memory_window{kDefaultMemoryWindow};
  ClockMode clock{ClockMode::kVirtual};
  double virtual_llm_latency{1.6};  // s
  double dt{kDefaultStepSeconds};
  VehicleLimits limits;
  ScoreConfig score;
  int degraded_after{3};  ///< consecutive failed command flows
  std::vector<std::shared_ptr<EnvironmentSource>> sources;  ///< empty -> scenario constants
  GatherOptions gather;
  std::optional<std::filesystem::path> output_dir;  ///< trip logs, events and transcript
};

class SessionDegraded : public std::runtime_error
{
public:
  SessionDegraded() : std::runtime_error("session is degraded after repeated failures; end the trip to recover") {}
};

enum class FlowStatus { kPending, kApplied, kRejected, kFailed, kSuperseded };

std::string to_string(FlowStatus status);

/// One command flow from utterance to outcome.
struct FlowRecord
{
  std::uint64_t flow_id{0};
  std::uint64_t trip_id{0};
  std::string command;
  double requested_at{0.0};  // sim s
  std::optional<double> completed_at;
  FlowStatus status{FlowStatus::kPending};
  double speed_limit{0.0};  ///< km/h, from the context the model saw
  std::string bundle_hash;
  std::string raw_text;
  std::optional<Verdict> verdict;
  std::optional<std::string> error;
  std::optional<double> latency;  // s, wall clock
  std::optional<std::uint64_t> record_id;
  std::optional<AppliedChange> change;
};

struct UtteranceResult
{
  UtteranceEvent event;
  std::optional<std::uint64_t> flow_id;    ///< Command
  std::optional<std::uint64_t> record_id;  ///< Evaluate
};

struct TripSummary
{
  std::uint64_t trip_id{0};
  std::size_t samples{0};
  bool takeover{false};
  std::optional<MetricsReport> report;  ///< absent when the trip is shorter than three samples
  TakeoverStats takeover_stats;
  std::optional<std::filesystem::path> log_path;
};

struct ActorView
{
  Vec2 position;
  double heading{0.0};
  double speed{0.0};  // m/s
  int lane_id{0};
};

/// Snapshot pushed to stream clients.
struct TelemetryFrame
{
  std::string session_id;
  std::uint64_t seq{0};
  std::uint64_t trip_id{0};
  double time{0.0};
  VehicleState ego;
  std::optional<Vec2> lookahead_point;
  std::vector<ActorView> actors;
  FollowerConfig follower;
  bool engaged{true};
  SessionState state{SessionState::kIdle};
  std::optional<FlowRecord> last_flow;
  std::uint64_t n_takeover{0};
  std::uint64_t n_operation{0};
};

/// One driver, one simulated vehicle, one command loop. Not thread-safe apart
/// from the worker completion queue; callers serialize access.
class Session
{
public:
  /// `backend` overrides the one described by cfg.backend.
  Session(SessionConfig cfg, std::shared_ptr<MemoryStore> memory, std::unique_ptr<Backend> backend = nullptr);
  ~Session();
  Session(const Session &) = delete;
  Session & operator=(const Session &) = delete;

  const SessionConfig & config() const { return cfg_; }
  const std::string & id() const { return cfg_.session_id; }
  SessionState state() const;
  const WorldState & world() const { return world_; }
  const FollowerConfig & follower() const { return executor_.current(); }
  std::uint64_t trip_id() const { return trip_id_; }
  std::uint64_t n_takeover() const { return n_takeover_; }
  std::uint64_t n_operation() const { return n_operation_; }
  bool takeover_this_trip() const { return takeover_this_trip_; }

  /// Throws SessionDegraded, NoPendingInteraction (evaluate without a pending
  /// command) or std::invalid_argument (empty command).
  UtteranceResult handle_utterance(const std::string & text);

  /// Starts a command flow; the outcome lands on a later step().
  std::uint64_t run_command_flow(const std::string & command);
  std::uint64_t run_evaluate_flow(const std::string & feedback);

  /// Disengages; counted at most once per trip.
  void record_takeover();

  /// Closes the trip: counts the operation, scores the log, resets the world.
  TripSummary end_trip();

  /// One simulation step, preceded by any model answers that are due.
  void step();
  void run_for(double seconds);

  /// True when no command flow is in flight.
  bool idle() const;
  /// Realtime clock: waits (wall clock) for in-flight calls to come back.
  void wait_for_workers();

  const std::vector<FlowRecord> & flows() const { return flows_; }
  const std::vector<TrajectoryRecord> & trip_log() const { return records_; }
  const std::vector<TripSummary> & trips() const { return trips_; }
  std::vector<double> latency_samples() const { return latency_samples_; }
  const std::vector<std::string> & events() const { return events_; }
  std::vector<std::string> transcript() const { return gateway_.transcript(); }
  TelemetryFrame telemetry() const;

private:
  struct Completion
  {
    std::uint64_t flow_id{0};
    double ready_at{0.0};
    std::optional<Translation> translation;
    std::optional<GatewayError> error;
  };

  struct Worker
  {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };

  void begin_trip();
  void process_completions();
  void finish_flow(FlowRecord & flow, const Completion & completion);
  void log_event(const std::string & json_line);
  void reap_workers(bool all);
  FlowRecord * find_flow(std::uint64_t flow_id);

  SessionConfig cfg_;
  std::shared_ptr<MemoryStore> memory_;
  Gateway gateway_;
  Executor executor_;
  SystemMessage system_;
  WorldState world_;

  std::uint64_t trip_id_{1};
  std::uint64_t n_takeover_{0};
  std::uint64_t n_operation_{0};
  bool takeover_this_trip_{false};
  std::string memory_snapshot_;
  std::uint64_t latest_flow_{0};
  std::uint64_t next_flow_{1};
  int consecutive_failures_{0};
  bool degraded_{false};
  bool applied_since_idle_{false};
  std::uint64_t total_steps_{0};

  std::vector<FlowRecord> flows_;
  std::vector<TrajectoryRecord> records_;
  std::vector<TripSummary> trips_;
  std::vector<double> latency_samples_;
  std::vector<double> trip_latency_;
  std::vector<std::string> events_;

  std::mutex completion_mutex_;
  std::vector<Completion> completions_;
  std::vector<Worker> workers_;
};

}  // namespace lmpdrive

#endif  // LMPDRIVE__SESSION_HPP_
