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

#include "lmpdrive/session.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "lmpdrive/serialization.hpp"
#include "lmpdrive/text.hpp"

namespace lmpdrive
{

std::string to_string(SessionState state)
{
  switch (state) {
    case SessionState::kIdle:
      return "idle";
    case SessionState::kAwaitingLlm:
      return "awaiting_llm";
    case SessionState::kExecuting:
      return "executing";
    case SessionState::kDegraded:
      return "degraded";
  }
  return "idle";
}

std::string to_string(UtteranceKind kind)
{
  switch (kind) {
    case UtteranceKind::kCommand:
      return "command";
    case UtteranceKind::kEvaluate:
      return "evaluate";
    case UtteranceKind::kUnrecognized:
      return "unrecognized";
  }
  return "unrecognized";
}

std::string to_string(FlowStatus status)
{
  switch (status) {
    case FlowStatus::kPending:
      return "pending";
    case FlowStatus::kApplied:
      return "applied";
    case FlowStatus::kRejected:
      return "rejected";
    case FlowStatus::kFailed:
      return "failed";
    case FlowStatus::kSuperseded:
      return "superseded";
  }
  return "pending";
}

namespace
{

// Trigger word followed by end of text, whitespace or punctuation.
std::optional<std::string> after_trigger(const std::string & text, std::string_view word)
{
  if (!starts_with_icase(text, word)) {
    return std::nullopt;
  }
  std::string rest = text.substr(word.size());
  if (!rest.empty() && std::isalnum(static_cast<unsigned char>(rest.front()))) {
    return std::nullopt;
  }
  std::size_t i = 0;
  while (i < rest.size() && (std::isspace(static_cast<unsigned char>(rest[i])) || rest[i] == ':' || rest[i] == ',')) {
    ++i;
  }
  return trim(rest.substr(i));
}

}  // namespace

UtteranceEvent route_utterance(const std::string & text, double received_at)
{
  UtteranceEvent ev;
  ev.text = text;
  ev.received_at = received_at;
  const std::string t = trim(text);
  if (auto rest = after_trigger(t, "command")) {
    ev.kind = UtteranceKind::kCommand;
    ev.payload = *rest;
  } else if (auto rest = after_trigger(t, "evaluate")) {
    ev.kind = UtteranceKind::kEvaluate;
    ev.payload = *rest;
  }
  return ev;
}

Session::Session(SessionConfig cfg, std::shared_ptr<MemoryStore> memory, std::unique_ptr<Backend> backend)
: cfg_(std::move(cfg)),
  memory_(std::move(memory)),
  gateway_(cfg_.backend, backend ? std::move(backend) : make_backend(cfg_.backend)),
  executor_(cfg_.scenario ? cfg_.scenario->initial_follower : FollowerConfig{})
{
  if (!cfg_.scenario) {
    throw std::invalid_argument("session needs a scenario");
  }
  cfg_.scenario->validate();
  if (!(cfg_.dt > 0.0 && cfg_.dt <= 0.1)) {
    throw std::invalid_argument("session dt must be in (0, 0.1]");
  }
  if (!(cfg_.virtual_llm_latency >= 0.0) || cfg_.degraded_after < 1) {
    throw std::invalid_argument("virtual latency must be >= 0 and degraded_after >= 1");
  }
  if (cfg_.session_id.empty()) {
    cfg_.session_id = "session";
  }
  if (cfg_.sources.empty()) {
    cfg_.sources.push_back(std::make_shared<StaticSource>(*cfg_.scenario));
  }
  system_ = build_system_message(*cfg_.scenario, default_exemplars());
  if (cfg_.output_dir) {
    std::filesystem::create_directories(*cfg_.output_dir);
    gateway_.set_transcript(*cfg_.output_dir / "transcript.jsonl");
  }
  begin_trip();
}

Session::~Session() { reap_workers(true); }

void Session::begin_trip()
{
  world_ = make_world(cfg_.scenario, to_tracking(cfg_.scenario->initial_follower));
  executor_.reset(cfg_.scenario->initial_follower);
  records_.clear();
  records_.push_back(record_from_world(world_));
  takeover_this_trip_ = false;
  applied_since_idle_ = false;
  trip_latency_.clear();
  // Taken once per trip, so feedback given now shapes prompts from the next trip on.
  if (cfg_.memory_enabled && memory_) {
    memory_snapshot_ = render_memory(memory_->load_history(cfg_.driver_id, cfg_.memory_window), cfg_.memory_window);
  } else {
    memory_snapshot_ = std::string(kNoHistorySentence);
  }
}

SessionState Session::state() const
{
  if (degraded_) {
    return SessionState::kDegraded;
  }
  if (!idle()) {
    return SessionState::kAwaitingLlm;
  }
  if (applied_since_idle_ && world_.engaged) {
    return SessionState::kExecuting;
  }
  return SessionState::kIdle;
}

bool Session::idle() const
{
  return std::none_of(flows_.begin(), flows_.end(), [](const FlowRecord & f) { return f.status == FlowStatus::kPending; });
}

void Session::log_event(const std::string & json_line)
{
  events_.push_back(json_line);
  if (cfg_.output_dir) {
    std::ofstream out(*cfg_.output_dir / "events.jsonl", std::ios::app);
    out << json_line << '\n';
  }
}

FlowRecord * Session::find_flow(std::uint64_t flow_id)
{
  for (auto it = flows_.rbegin(); it != flows_.rend(); ++it) {
    if (it->flow_id == flow_id) {
      return &*it;
    }
  }
  return nullptr;
}

UtteranceResult Session::handle_utterance(const std::string & text)
{
  if (degraded_) {
    throw SessionDegraded();
  }
  UtteranceResult result;
  result.event = route_utterance(text, world_.time);
  log_event(nlohmann::json{{"type", "utterance"},
                           {"t", world_.time},
                           {"trip_id", trip_id_},
                           {"kind", to_string(result.event.kind)},
                           {"text", text}}
              .dump());
  switch (result.event.kind) {
    case UtteranceKind::kCommand:
      result.flow_id = run_command_flow(result.event.payload);
      break;
    case UtteranceKind::kEvaluate:
      result.record_id = run_evaluate_flow(result.event.payload);
      break;
    case UtteranceKind::kUnrecognized:
      break;
  }
  return result;
}

std::uint64_t Session::run_command_flow(const std::string & command)
{
  if (degraded_) {
    throw SessionDegraded();
  }
  const ContextSnapshot snapshot = gather(world_, cfg_.sources, cfg_.gather);
  const PromptBundle bundle = assemble(command, system_, render_context(snapshot), memory_snapshot_);

  // A newer command supersedes whatever is still in flight.
  for (auto & f : flows_) {
    if (f.status == FlowStatus::kPending) {
      f.status = FlowStatus::kSuperseded;
      f.completed_at = world_.time;
    }
  }
  FlowRecord flow;
  flow.flow_id = next_flow_++;
  flow.trip_id = trip_id_;
  flow.command = command;
  flow.requested_at = world_.time;
  flow.speed_limit = snapshot.speed_limit;
  flow.bundle_hash = bundle_hash(bundle);
  flows_.push_back(flow);
  latest_flow_ = flow.flow_id;
  log_event(nlohmann::json{{"type", "flow_started"},
                           {"t", world_.time},
                           {"trip_id", trip_id_},
                           {"flow_id", flow.flow_id},
                           {"command", command},
                           {"bundle_hash", flow.bundle_hash}}
              .dump());

  const FollowerConfig current = executor_.current();
  if (cfg_.clock == ClockMode::kVirtual) {
    Completion c;
    c.flow_id = flow.flow_id;
    c.ready_at = world_.time + cfg_.virtual_llm_latency;
    try {
      c.translation = gateway_.translate(bundle, current);
    } catch (const GatewayError & e) {
      c.error = e;
    }
    std::lock_guard<std::mutex> lock(completion_mutex_);
    completions_.push_back(std::move(c));
  } else {
    auto done = std::make_shared<std::atomic<bool>>(false);
    const std::uint64_t id = flow.flow_id;
    std::thread worker([this, bundle, current, id, done]() {
      Completion c;
      c.flow_id = id;
      c.ready_at = 0.0;
      try {
        c.translation = gateway_.translate(bundle, current);
      } catch (const GatewayError & e) {
        c.error = e;
      } catch (const std::exception & e) {
        c.error = GatewayError(GatewayErrorKind::kTransport, e.what());
      }
      {
        std::lock_guard<std::mutex> lock(completion_mutex_);
        completions_.push_back(std::move(c));
      }
      done->store(true);
    });
    workers_.push_back({std::move(worker), done});
  }
  return flow.flow_id;
}

std::uint64_t Session::run_evaluate_flow(const std::string & feedback)
{
  if (!memory_) {
    throw NoPendingInteraction();
  }
  if (trim(feedback).empty()) {
    throw std::invalid_argument("feedback must be nonempty");
  }
  const std::uint64_t id = memory_->attach_feedback(cfg_.driver_id, feedback);
  log_event(nlohmann::json{{"type", "feedback"},
                           {"t", world_.time},
                           {"trip_id", trip_id_},
                           {"record_id", id},
                           {"feedback", feedback}}
              .dump());
  return id;
}

void Session::record_takeover()
{
  if (!takeover_this_trip_) {
    ++n_takeover_;
    takeover_this_trip_ = true;
  }
  world_.engaged = false;
  applied_since_idle_ = false;
  // An answer landing after the driver took over must not re-engage.
  for (auto & f : flows_) {
    if (f.status == FlowStatus::kPending) {
      f.status = FlowStatus::kSuperseded;
      f.completed_at = world_.time;
    }
  }
  latest_flow_ = 0;
  log_event(nlohmann::json{{"type", "takeover"},
                           {"t", world_.time},
                           {"trip_id", trip_id_},
                           {"n_takeover", n_takeover_}}
              .dump());
}

void Session::process_completions()
{
  std::vector<Completion> due;
  {
    std::lock_guard<std::mutex> lock(completion_mutex_);
    auto split = std::stable_partition(completions_.begin(), completions_.end(), [this](const Completion & c) {
      return !(c.ready_at <= world_.time + 1e-9);
    });
    due.assign(std::make_move_iterator(split), std::make_move_iterator(completions_.end()));
    completions_.erase(split, completions_.end());
  }
  std::sort(due.begin(), due.end(), [](const Completion & a, const Completion & b) {
    return a.ready_at != b.ready_at ? a.ready_at < b.ready_at : a.flow_id < b.flow_id;
  });
  for (const auto & c : due) {
    if (c.translation) {
      latency_samples_.push_back(c.translation->latency.seconds);
      trip_latency_.push_back(c.translation->latency.seconds);
    }
    FlowRecord * flow = find_flow(c.flow_id);
    if (flow == nullptr) {
      continue;
    }
    if (c.translation) {
      flow->latency = c.translation->latency.seconds;
      flow->raw_text = c.translation->text;
    }
    if (flow->status != FlowStatus::kPending || flow->flow_id != latest_flow_) {
      if (flow->status == FlowStatus::kPending) {
        flow->status = FlowStatus::kSuperseded;
        flow->completed_at = world_.time;
      }
      log_event(nlohmann::json{{"type", "flow_discarded"},
                               {"t", world_.time},
                               {"trip_id", trip_id_},
                               {"flow_id", flow->flow_id}}
                  .dump());
      continue;
    }
    finish_flow(*flow, c);
  }
}

void Session::finish_flow(FlowRecord & flow, const Completion & c)
{
  flow.completed_at = world_.time;
  bool failed = false;
  if (c.error) {
    flow.status = FlowStatus::kFailed;
    flow.error = to_string(c.error->kind()) + ": " + c.error->what();
    failed = true;
  } else {
    GateResult gr = gate(flow.raw_text, limits_for_speed_limit(flow.speed_limit));
    flow.verdict = gr.verdict;
    std::string program_text = gr.lmp ? serialize_lmp(*gr.lmp) : flow.raw_text;
    if (gr.verdict.accepted()) {
      executor_.submit({flow.flow_id, *gr.lmp, gr.verdict, flow.requested_at});
      for (auto & done : executor_.drain(world_)) {
        if (auto * change = std::get_if<AppliedChange>(&done.result); change && done.flow_id == flow.flow_id) {
          flow.change = *change;
        }
      }
      flow.status = flow.change ? FlowStatus::kApplied : FlowStatus::kRejected;
      applied_since_idle_ = flow.change.has_value();
    } else {
      flow.status = FlowStatus::kRejected;
      failed = true;
    }
    if (memory_) {
      try {
        flow.record_id = memory_->append_interaction(
          cfg_.driver_id, trip_id_, flow.command, program_text, to_string(gr.verdict.outcome));
      } catch (const StorageFailure & e) {
        flow.error = std::string("memory: ") + e.what();
      }
    }
  }
  consecutive_failures_ = failed ? consecutive_failures_ + 1 : 0;
  if (consecutive_failures_ >= cfg_.degraded_after) {
    degraded_ = true;
  }
  log_event(nlohmann::json{{"type", "flow_finished"}, {"t", world_.time}, {"flow", to_json(flow)}, {"degraded", degraded_}}
              .dump());
}

void Session::reap_workers(bool all)
{
  for (auto it = workers_.begin(); it != workers_.end();) {
    if (all || it->done->load()) {
      if (it->thread.joinable()) {
        it->thread.join();
      }
      it = workers_.erase(it);
    } else {
      ++it;
    }
  }
}

void Session::wait_for_workers() { reap_workers(true); }

void Session::step()
{
  reap_workers(false);
  process_completions();
  world_ = lmpdrive::step(world_, cfg_.dt, cfg_.limits);
  records_.push_back(record_from_world(world_));
  ++total_steps_;
}

void Session::run_for(double seconds)
{
  const auto n = static_cast<long long>(std::llround(seconds / cfg_.dt));
  for (long long i = 0; i < n; ++i) {
    step();
  }
}

TripSummary Session::end_trip()
{
  for (auto & f : flows_) {
    if (f.status == FlowStatus::kPending) {
      f.status = FlowStatus::kSuperseded;
      f.completed_at = world_.time;
    }
  }
  latest_flow_ = 0;
  ++n_operation_;

  TripSummary summary;
  summary.trip_id = trip_id_;
  summary.samples = records_.size();
  summary.takeover = takeover_this_trip_;
  summary.takeover_stats = {n_takeover_, n_operation_, takeover_rate(n_takeover_, n_operation_)};
  if (records_.size() >= 3) {
    MetricsReport report = compute_report(TrajectoryLog::from_records(records_), cfg_.score);
    report.latency_samples = trip_latency_;
    if (!trip_latency_.empty()) {
      report.latency = latency_stats(trip_latency_);
    }
    report.takeover = summary.takeover_stats;
    summary.report = report;
  }
  if (cfg_.output_dir) {
    const auto stem = "trip-" + std::to_string(trip_id_);
    const auto log_path = *cfg_.output_dir / (stem + ".csv");
    std::ofstream log(log_path);
    write_trajectory(log, records_);
    summary.log_path = log_path;
    std::ofstream metrics(*cfg_.output_dir / (stem + ".metrics.json"));
    metrics << to_json(summary).dump(2) << '\n';
  }
  log_event(nlohmann::json{{"type", "trip_end"}, {"t", world_.time}, {"trip", to_json(summary)}}.dump());
  trips_.push_back(summary);

  ++trip_id_;
  degraded_ = false;
  consecutive_failures_ = 0;
  begin_trip();
  return summary;
}

TelemetryFrame Session::telemetry() const
{
  TelemetryFrame f;
  f.session_id = cfg_.session_id;
  f.seq = total_steps_;
  f.trip_id = trip_id_;
  f.time = world_.time;
  f.ego = world_.ego;
  f.follower = executor_.current();
  f.engaged = world_.engaged;
  f.state = state();
  f.n_takeover = n_takeover_;
  f.n_operation = n_operation_;
  if (!flows_.empty()) {
    f.last_flow = flows_.back();
  }
  if (world_.engaged) {
    const Polyline & path = active_path(world_);
    const double s = path.project(world_.ego.position).s;
    f.lookahead_point =
      path.circle_intersection(world_.ego.position, effective_lookahead(world_.tracking, world_.ego.speed), s);
  }
  for (const auto & a : world_.actors) {
    const Polyline & lane = cfg_.scenario->tracks[static_cast<std::size_t>(a.lane_id)];
    f.actors.push_back({a.position, lane.heading_at(a.s), a.speed, a.lane_id});
  }
  return f;
}

}  // namespace lmpdrive
