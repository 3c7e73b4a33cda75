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

#include <filesystem>
#include <memory>

#include "doctest.h"
#include "json.hpp"
#include "lmpdrive/session.hpp"
#include "support.hpp"

using namespace lmpdrive;
using lmpdrive::testing::TempDir;

namespace
{

SessionConfig highway_config(const std::string & driver = "tester")
{
  SessionConfig cfg;
  cfg.session_id = "s1";
  cfg.driver_id = driver;
  cfg.scenario = std::make_shared<const Scenario>(make_highway_scenario(0));
  cfg.virtual_llm_latency = 1.0;
  return cfg;
}

std::unique_ptr<Session> make_session(
  const TempDir & dir, SessionConfig cfg = highway_config(), std::unique_ptr<Backend> backend = nullptr)
{
  return std::make_unique<Session>(cfg, std::make_shared<MemoryStore>(dir / "memory"), std::move(backend));
}

}  // namespace

TEST_CASE("keyword routing")
{
  auto ev = route_utterance("command could you drive faster", 1.0);
  CHECK(ev.kind == UtteranceKind::kCommand);
  CHECK(ev.payload == "could you drive faster");
  CHECK(route_utterance("Command: slow down", 0).payload == "slow down");
  CHECK(route_utterance("  EVALUATE, too fast ", 0).kind == UtteranceKind::kEvaluate);
  CHECK(route_utterance("evaluate, too fast", 0).payload == "too fast");
  CHECK(route_utterance("commander slow down", 0).kind == UtteranceKind::kUnrecognized);
  CHECK(route_utterance("please command the car", 0).kind == UtteranceKind::kUnrecognized);
  CHECK(route_utterance("", 0).kind == UtteranceKind::kUnrecognized);
}

TEST_CASE("command flow lands after the virtual latency and is applied")
{
  TempDir dir;
  auto s = make_session(dir);
  s->run_for(1.0);
  const auto r = s->handle_utterance("command could you drive more conservatively");
  REQUIRE(r.flow_id);
  CHECK(s->state() == SessionState::kAwaitingLlm);
  s->run_for(0.9);
  CHECK(s->flows().back().status == FlowStatus::kPending);
  s->run_for(0.2);
  const auto & flow = s->flows().back();
  CHECK(flow.status == FlowStatus::kApplied);
  REQUIRE(flow.completed_at);
  CHECK(*flow.completed_at - flow.requested_at == doctest::Approx(1.0).epsilon(0.03));
  CHECK(s->follower().target_velocity == 30.0);
  CHECK(s->state() == SessionState::kExecuting);
  REQUIRE(flow.record_id);
  CHECK(flow.verdict->accepted());
  CHECK(s->latency_samples().size() == 1);
}

TEST_CASE("unrecognized utterances start nothing")
{
  TempDir dir;
  auto s = make_session(dir);
  const auto r = s->handle_utterance("hello there");
  CHECK(r.event.kind == UtteranceKind::kUnrecognized);
  CHECK_FALSE(r.flow_id.has_value());
  CHECK(s->flows().empty());
  CHECK_THROWS_AS(s->handle_utterance("command   "), std::invalid_argument);
}

TEST_CASE("a newer command supersedes one still in flight")
{
  TempDir dir;
  auto s = make_session(dir);
  s->handle_utterance("command can you drive faster");
  s->run_for(0.5);
  s->handle_utterance("command slow down");
  s->run_for(1.5);
  REQUIRE(s->flows().size() == 2);
  CHECK(s->flows()[0].status == FlowStatus::kSuperseded);
  CHECK(s->flows()[1].status == FlowStatus::kApplied);
  CHECK(s->follower().target_velocity == 30.0);
}

TEST_CASE("evaluate needs a pending interaction and attaches once")
{
  TempDir dir;
  auto s = make_session(dir);
  CHECK_THROWS_AS(s->handle_utterance("evaluate too fast"), NoPendingInteraction);
  s->handle_utterance("command slow down");
  s->run_for(2.0);
  const auto r = s->handle_utterance("evaluate A little bit too fast.");
  REQUIRE(r.record_id);
  CHECK(*r.record_id == *s->flows().back().record_id);
  CHECK_THROWS_AS(s->handle_utterance("evaluate again"), NoPendingInteraction);
}

TEST_CASE("repeated failures degrade the session until the trip ends")
{
  TempDir dir;
  auto s = make_session(dir, highway_config(), std::make_unique<MockBackend>(MockOptions{0.0, 0, true}));
  for (int i = 0; i < 3; ++i) {
    s->handle_utterance("command faster");
    s->run_for(1.2);
    CHECK(s->flows().back().status == FlowStatus::kRejected);
  }
  CHECK(s->state() == SessionState::kDegraded);
  CHECK_THROWS_AS(s->handle_utterance("command faster"), SessionDegraded);
  CHECK(s->follower().target_velocity == 40.0);
  s->end_trip();
  CHECK(s->state() == SessionState::kIdle);
  CHECK_NOTHROW(s->handle_utterance("command faster"));
}

TEST_CASE("rejected programs are remembered with their verdict")
{
  TempDir dir;
  auto memory = std::make_shared<MemoryStore>(dir / "memory");
  Session s(highway_config("rj"), memory, std::make_unique<MockBackend>(MockOptions{0.0, 0, true}));
  s.handle_utterance("command faster");
  s.run_for(1.2);
  const auto history = memory->load_history("rj", 10);
  REQUIRE(history.size() == 1);
  CHECK(history[0].verdict == "format_rejected");
}

TEST_CASE("gateway errors mark the flow failed")
{
  TempDir dir;
  auto cfg = highway_config();
  cfg.backend.retry_count = 0;
  auto s = make_session(dir, cfg, std::make_unique<MockBackend>(MockOptions{0.0, 5, false}));
  s->handle_utterance("command faster");
  s->run_for(1.2);
  CHECK(s->flows().back().status == FlowStatus::kFailed);
  REQUIRE(s->flows().back().error);
  CHECK(s->flows().back().error->rfind("transport", 0) == 0);
}

TEST_CASE("takeover counts once per trip and blocks late answers")
{
  TempDir dir;
  auto s = make_session(dir);
  s->handle_utterance("command faster");
  s->run_for(0.3);
  s->record_takeover();
  s->record_takeover();
  CHECK(s->n_takeover() == 1);
  CHECK_FALSE(s->world().engaged);
  s->run_for(1.5);
  CHECK(s->flows().back().status == FlowStatus::kSuperseded);
  CHECK_FALSE(s->world().engaged);

  auto t1 = s->end_trip();
  CHECK(t1.takeover);
  CHECK(t1.takeover_stats.n_takeover == 1);
  CHECK(t1.takeover_stats.n_operation == 1);
  CHECK(*t1.takeover_stats.rate == 1.0);
  CHECK(s->world().engaged);

  s->run_for(1.0);
  auto t2 = s->end_trip();
  CHECK_FALSE(t2.takeover);
  CHECK(*t2.takeover_stats.rate == doctest::Approx(0.5));
  CHECK(s->trip_id() == 3);
}

TEST_CASE("end_trip scores the log and writes artifacts")
{
  TempDir dir;
  auto cfg = highway_config();
  cfg.output_dir = dir / "out";
  auto s = make_session(dir, cfg);
  s->handle_utterance("command slow down");
  s->run_for(10.0);
  const auto trip = s->end_trip();
  CHECK(trip.samples == 501);
  REQUIRE(trip.report);
  CHECK(trip.report->driving_score > 0.0);
  REQUIRE(trip.report->latency);
  CHECK(trip.report->latency->count == 1);
  REQUIRE(trip.log_path);
  CHECK(std::filesystem::exists(*trip.log_path));
  CHECK(std::filesystem::exists(dir / "out" / "trip-1.metrics.json"));
  CHECK(std::filesystem::exists(dir / "out" / "events.jsonl"));
  CHECK(std::filesystem::exists(dir / "out" / "transcript.jsonl"));
  CHECK(read_trajectory_file(trip.log_path->string()).size() == 501);

  // A trip too short to score still counts.
  const auto empty = s->end_trip();
  CHECK_FALSE(empty.report.has_value());
  CHECK(s->n_operation() == 2);
}

TEST_CASE("memory snapshot is taken per trip and skipped when disabled")
{
  TempDir dir;
  auto memory = std::make_shared<MemoryStore>(dir / "memory");
  memory->append_interaction("m", 1, "slow down", "rostopic pub /vehicle/engage std_msgs/Bool \"data: true\"");
  memory->attach_feedback("m", "too fast");

  auto cfg = highway_config("m");
  {
    Session on(cfg, memory);
    on.handle_utterance("command faster");
    on.run_for(1.2);
    const auto entry = parse_transcript_line(on.transcript().back());
    CHECK(entry.request.find("Evaluation: too fast") != std::string::npos);
  }
  cfg.memory_enabled = false;
  {
    Session off(cfg, memory);
    off.handle_utterance("command faster");
    off.run_for(1.2);
    const auto entry = parse_transcript_line(off.transcript().back());
    CHECK(entry.request.find(std::string(kNoHistorySentence)) != std::string::npos);
    CHECK(entry.request.find("Evaluation:") == std::string::npos);
  }
}

TEST_CASE("realtime clock applies answers from a worker thread")
{
  TempDir dir;
  auto cfg = highway_config();
  cfg.clock = ClockMode::kRealtime;
  auto s = make_session(dir, cfg, std::make_unique<MockBackend>(MockOptions{0.05, 0, false}));
  s->handle_utterance("command slow down");
  CHECK(s->state() == SessionState::kAwaitingLlm);
  s->wait_for_workers();
  s->step();
  CHECK(s->flows().back().status == FlowStatus::kApplied);
  CHECK(s->latency_samples().back() >= 0.05);
}

TEST_CASE("telemetry frames advance and carry the last flow")
{
  TempDir dir;
  auto s = make_session(dir);
  const auto f0 = s->telemetry();
  s->handle_utterance("command faster");
  s->run_for(1.2);
  const auto f1 = s->telemetry();
  CHECK(f1.seq > f0.seq);
  CHECK(f1.session_id == "s1");
  REQUIRE(f1.last_flow);
  CHECK(f1.last_flow->status == FlowStatus::kApplied);
  CHECK(f1.follower.target_velocity == 50.0);
  CHECK(f1.actors.size() == 3);
  CHECK(f1.lookahead_point.has_value());
}

TEST_CASE("session config is validated")
{
  TempDir dir;
  auto cfg = highway_config();
  cfg.scenario = nullptr;
  CHECK_THROWS_AS(make_session(dir, cfg), std::invalid_argument);
  cfg = highway_config();
  cfg.dt = 0.5;
  CHECK_THROWS_AS(make_session(dir, cfg), std::invalid_argument);
}
