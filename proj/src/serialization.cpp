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

#include "lmpdrive/serialization.hpp"

namespace lmpdrive
{

namespace
{

template <typename T>
nlohmann::json opt(const std::optional<T> & v)
{
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json vec(Vec2 p) { return {{"x", p.x}, {"y", p.y}}; }

}  // namespace

nlohmann::json to_json(const FollowerConfig & cfg)
{
  return {{"velocity", cfg.target_velocity},
          {"lookahead_distance", cfg.lookahead_distance},
          {"lookahead_ratio", cfg.lookahead_ratio},
          {"param_flag", cfg.param_flag}};
}

nlohmann::json to_json(const Verdict & verdict)
{
  nlohmann::json violations = nlohmann::json::array();
  for (const auto & v : verdict.violations) {
    violations.push_back({{"field", v.field}, {"value", v.value}, {"bound", v.bound}});
  }
  return {{"outcome", to_string(verdict.outcome)}, {"violations", violations}, {"detail", verdict.detail}};
}

nlohmann::json to_json(const MetricsReport & r)
{
  nlohmann::json j{{"ttc_min", opt(r.ttc_min)},
                   {"speed_variance", r.speed_variance},
                   {"mean_abs_accel", r.mean_abs_accel},
                   {"mean_abs_jerk", r.mean_abs_jerk},
                   {"sub_scores",
                    {{"ttc", r.sub_scores.ttc},
                     {"speed_variance", r.sub_scores.variance},
                     {"mean_abs_accel", r.sub_scores.accel},
                     {"mean_abs_jerk", r.sub_scores.jerk}}},
                   {"driving_score", r.driving_score},
                   {"latency_samples", r.latency_samples},
                   {"takeover",
                    {{"n_takeover", r.takeover.n_takeover},
                     {"n_operation", r.takeover.n_operation},
                     {"rate", opt(r.takeover.rate)}}}};
  j["latency"] = r.latency ? nlohmann::json{{"mean", r.latency->mean}, {"p95", r.latency->p95}, {"count", r.latency->count}}
                           : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const TripSummary & trip)
{
  return {{"trip_id", trip.trip_id},
          {"samples", trip.samples},
          {"takeover", trip.takeover},
          {"report", trip.report ? to_json(*trip.report) : nlohmann::json(nullptr)},
          {"n_takeover", trip.takeover_stats.n_takeover},
          {"n_operation", trip.takeover_stats.n_operation},
          {"takeover_rate", opt(trip.takeover_stats.rate)},
          {"log_path", trip.log_path ? nlohmann::json(trip.log_path->string()) : nlohmann::json(nullptr)}};
}

nlohmann::json to_json(const FlowRecord & f)
{
  nlohmann::json j{{"flow_id", f.flow_id},
                   {"trip_id", f.trip_id},
                   {"command", f.command},
                   {"requested_at", f.requested_at},
                   {"completed_at", opt(f.completed_at)},
                   {"status", to_string(f.status)},
                   {"speed_limit", f.speed_limit},
                   {"bundle_hash", f.bundle_hash},
                   {"raw_text", f.raw_text},
                   {"error", opt(f.error)},
                   {"latency", opt(f.latency)},
                   {"record_id", opt(f.record_id)}};
  j["verdict"] = f.verdict ? to_json(*f.verdict) : nlohmann::json(nullptr);
  if (f.change) {
    j["change"] = {{"previous", to_json(f.change->previous)},
                   {"next", to_json(f.change->next)},
                   {"engage_transition", to_string(f.change->engage_transition)},
                   {"applied_at", f.change->applied_at}};
  } else {
    j["change"] = nullptr;
  }
  return j;
}

nlohmann::json to_json(const TelemetryFrame & fr)
{
  nlohmann::json actors = nlohmann::json::array();
  for (const auto & a : fr.actors) {
    actors.push_back({{"position", vec(a.position)}, {"heading", a.heading}, {"speed", a.speed}, {"lane", a.lane_id}});
  }
  return {{"session_id", fr.session_id},
          {"seq", fr.seq},
          {"trip_id", fr.trip_id},
          {"time", fr.time},
          {"ego",
           {{"position", vec(fr.ego.position)},
            {"heading", fr.ego.heading},
            {"speed", fr.ego.speed},
            {"speed_kmh", fr.ego.speed * kKmhPerMps},
            {"acceleration", fr.ego.acceleration},
            {"steering", fr.ego.steering_angle}}},
          {"lookahead_point", fr.lookahead_point ? vec(*fr.lookahead_point) : nlohmann::json(nullptr)},
          {"actors", actors},
          {"follower", to_json(fr.follower)},
          {"engaged", fr.engaged},
          {"state", to_string(fr.state)},
          {"last_flow", fr.last_flow ? to_json(*fr.last_flow) : nlohmann::json(nullptr)},
          {"n_takeover", fr.n_takeover},
          {"n_operation", fr.n_operation}};
}

nlohmann::json to_json(const MemoryRecord & r)
{
  return {{"record_id", r.record_id}, {"trip_id", r.trip_id}, {"timestamp", r.timestamp}, {"command", r.command},
          {"lmp", r.lmp},             {"verdict", r.verdict},   {"feedback", opt(r.feedback)}};
}

}  // namespace lmpdrive
