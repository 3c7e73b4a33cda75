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

#include "lmpdrive/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace lmpdrive
{

std::string to_string(ScenarioKind kind)
{
  switch (kind) {
    case ScenarioKind::kHighway:
      return "highway";
    case ScenarioKind::kIntersection:
      return "intersection";
    case ScenarioKind::kParking:
      return "parking";
  }
  return "highway";
}

ScenarioKind scenario_kind_from_string(const std::string & text)
{
  if (text == "highway") {
    return ScenarioKind::kHighway;
  }
  if (text == "intersection") {
    return ScenarioKind::kIntersection;
  }
  if (text == "parking") {
    return ScenarioKind::kParking;
  }
  throw std::invalid_argument("unknown scenario kind: " + text);
}

void Scenario::validate() const
{
  if (tracks.empty()) {
    throw std::invalid_argument("scenario has no tracks");
  }
  for (const auto & track : tracks) {
    if (track.points().size() < 2) {
      throw std::invalid_argument("track needs at least two waypoints");
    }
  }
  if (!(speed_limit > 0.0)) {
    throw std::invalid_argument("speed_limit must be positive");
  }
  if (ego_lane < 0 || static_cast<std::size_t>(ego_lane) >= tracks.size()) {
    throw std::invalid_argument("ego_lane does not name a track");
  }
  for (const auto & actor : actors) {
    if (actor.lane_id < 0 || static_cast<std::size_t>(actor.lane_id) >= tracks.size()) {
      throw std::invalid_argument("actor lane does not name a track");
    }
    for (std::size_t i = 0; i < actor.speed_profile.size(); ++i) {
      if (actor.speed_profile[i].speed < 0.0) {
        throw std::invalid_argument("actor profile speed must be >= 0");
      }
      if (i > 0 && !(actor.speed_profile[i].time > actor.speed_profile[i - 1].time)) {
        throw std::invalid_argument("actor profile times must be strictly increasing");
      }
    }
  }
  const auto & f = initial_follower;
  if (f.target_velocity < 0.0 || !(f.lookahead_distance > 0.0) || !(f.lookahead_ratio > 0.0)) {
    throw std::invalid_argument("initial follower config out of domain");
  }
}

namespace
{

constexpr double kLaneSpacing = 3.7;

double jitter(std::mt19937_64 & rng, double half_width)
{
  std::uniform_real_distribution<double> dist(-half_width, half_width);
  return dist(rng);
}

ActorState make_actor(int lane, double s, std::vector<SpeedBreakpoint> profile)
{
  ActorState actor;
  actor.lane_id = lane;
  actor.s = s;
  actor.speed_profile = std::move(profile);
  return actor;
}

Polyline make_rounded_loop(double width, double height, double radius, double spacing)
{
  // Counterclockwise rectangle with quarter-circle corners, starting mid-bottom.
  std::vector<Vec2> pts;
  const double hw = width / 2.0 - radius;
  const double hh = height / 2.0 - radius;
  auto straight = [&](Vec2 a, Vec2 b) {
    const double len = distance(a, b);
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / spacing)));
    for (std::size_t i = 0; i < n; ++i) {
      pts.push_back(a + (b - a) * (static_cast<double>(i) / static_cast<double>(n)));
    }
  };
  auto arc = [&](Vec2 c, double from) {
    constexpr std::size_t n = 12;
    for (std::size_t i = 0; i < n; ++i) {
      const double th = from + (std::numbers::pi / 2.0) * static_cast<double>(i) / n;
      pts.push_back(c + Vec2{radius * std::cos(th), radius * std::sin(th)});
    }
  };
  const double h2 = height / 2.0;
  const double w2 = width / 2.0;
  straight({0.0, -h2}, {hw, -h2});
  arc({hw, -hh}, -std::numbers::pi / 2.0);
  straight({w2, -hh}, {w2, hh});
  arc({hw, hh}, 0.0);
  straight({hw, h2}, {-hw, h2});
  arc({-hw, hh}, std::numbers::pi / 2.0);
  straight({-w2, hh}, {-w2, -hh});
  arc({-hw, -hh}, std::numbers::pi);
  straight({-hw, -h2}, {0.0, -h2});
  return Polyline(std::move(pts), true);
}

}  // namespace

Scenario make_highway_scenario(std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  Scenario sc;
  sc.kind = ScenarioKind::kHighway;
  constexpr double length = 6000.0;
  // lane 0 = left, 1 = center, 2 = right
  for (int lane = 0; lane < 3; ++lane) {
    const double y = kLaneSpacing * static_cast<double>(1 - lane);
    sc.tracks.push_back(make_line({0.0, y}, 0.0, length, 10.0));
  }
  sc.speed_limit = 60.0;
  sc.weather = "sunny";
  sc.road_type = "highway";
  sc.traffic_level = "light";
  sc.ego_lane = 1;
  sc.ego_start_s = 50.0;
  sc.initial_follower = {40.0, 12.0, 2.0, 1};

  const double left = (45.0 + jitter(rng, 3.0)) / kKmhPerMps;
  const double right = (35.0 + jitter(rng, 3.0)) / kKmhPerMps;
  const double lead = (58.0 + jitter(rng, 1.0)) / kKmhPerMps;
  sc.actors.push_back(make_actor(0, 80.0 + jitter(rng, 10.0), {{0.0, left}, {20.0, left + 0.5}, {40.0, left}}));
  sc.actors.push_back(make_actor(2, 20.0 + jitter(rng, 10.0), {{0.0, right}, {30.0, right - 0.5}}));
  sc.actors.push_back(make_actor(1, 250.0 + jitter(rng, 10.0), {{0.0, lead}}));
  return sc;
}

Scenario make_intersection_scenario(std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  Scenario sc;
  sc.kind = ScenarioKind::kIntersection;
  sc.tracks.push_back(make_line({-400.0, 0.0}, 0.0, 800.0, 5.0));
  sc.tracks.push_back(make_line({0.0, -400.0}, std::numbers::pi / 2.0, 800.0, 5.0));
  sc.speed_limit = 40.0;
  sc.weather = "sunny";
  sc.road_type = "urban road";
  sc.traffic_level = "moderate";
  sc.ego_lane = 0;
  sc.ego_start_s = 250.0;
  sc.initial_follower = {30.0, 10.5, 2.0, 1};
  const double crossing = (30.0 + jitter(rng, 4.0)) / kKmhPerMps;
  sc.actors.push_back(make_actor(1, 300.0 + jitter(rng, 10.0), {{0.0, crossing}, {10.0, crossing}}));
  return sc;
}

Scenario make_parking_scenario(std::uint64_t /*seed*/)
{
  Scenario sc;
  sc.kind = ScenarioKind::kParking;
  sc.tracks.push_back(make_rounded_loop(80.0, 40.0, 10.0, 2.0));
  sc.speed_limit = 15.0;
  sc.weather = "sunny";
  sc.road_type = "parking lot";
  sc.traffic_level = "light";
  sc.ego_lane = 0;
  sc.ego_start_s = 0.0;
  sc.initial_follower = {10.0, 7.5, 1.0, 1};
  return sc;
}

Scenario make_scenario(ScenarioKind kind, std::uint64_t seed)
{
  switch (kind) {
    case ScenarioKind::kIntersection:
      return make_intersection_scenario(seed);
    case ScenarioKind::kParking:
      return make_parking_scenario(seed);
    case ScenarioKind::kHighway:
      break;
  }
  return make_highway_scenario(seed);
}

double profile_speed(const std::vector<SpeedBreakpoint> & profile, double t, double fallback)
{
  if (profile.empty()) {
    return fallback;
  }
  if (t <= profile.front().time) {
    return profile.front().speed;
  }
  if (t >= profile.back().time) {
    return profile.back().speed;
  }
  auto hi = std::upper_bound(
    profile.begin(), profile.end(), t, [](double value, const SpeedBreakpoint & b) { return value < b.time; });
  auto lo = std::prev(hi);
  const double u = (t - lo->time) / (hi->time - lo->time);
  return lo->speed + u * (hi->speed - lo->speed);
}

WorldState make_world(std::shared_ptr<const Scenario> scenario, const TrackingConfig & tracking)
{
  scenario->validate();
  WorldState w;
  w.scenario = scenario;
  w.tracking = tracking;
  w.ego_lane = scenario->ego_lane;
  const Polyline & track = scenario->tracks[static_cast<std::size_t>(scenario->ego_lane)];
  w.ego.position = track.point_at(scenario->ego_start_s);
  w.ego.heading = normalize_angle(track.heading_at(scenario->ego_start_s));
  w.ego.speed = scenario->initial_follower.target_velocity / kKmhPerMps;
  w.actors = scenario->actors;
  for (auto & actor : w.actors) {
    actor.speed = profile_speed(actor.speed_profile, 0.0, actor.speed);
    actor.position = scenario->tracks[static_cast<std::size_t>(actor.lane_id)].point_at(actor.s);
  }
  return w;
}

double effective_lookahead(const TrackingConfig & cfg, double speed)
{
  return std::max(cfg.lookahead_distance, cfg.lookahead_ratio * speed);
}

double pure_pursuit_steering(const VehicleState & state, const Polyline & track, const TrackingConfig & cfg)
{
  if (track.empty()) {
    throw NoLookaheadPoint();
  }
  const double ld = effective_lookahead(cfg, state.speed);
  const Projection proj = track.project(state.position);
  std::optional<Vec2> target = track.circle_intersection(state.position, ld, proj.s);
  if (!target) {
    if (!track.closed() && distance(state.position, track.points().back()) < ld) {
      throw NoLookaheadPoint();
    }
    // Farther than ld from the track: steer at the point ld ahead of the foot point.
    if (!track.closed() && proj.s + ld > track.length()) {
      throw NoLookaheadPoint();
    }
    target = track.point_at(proj.s + ld);
  }
  const Vec2 d = *target - state.position;
  const double dist = d.norm();
  if (!(dist > 0.0)) {
    return 0.0;
  }
  const double alpha = normalize_angle(std::atan2(d.y, d.x) - state.heading);
  return std::atan(2.0 * state.wheelbase * std::sin(alpha) / dist);
}

double speed_controller(
  const VehicleState & state, const TrackingConfig & cfg, const std::optional<LeadInfo> & lead, double dt,
  const VehicleLimits & limits, const SpeedControlParams & params)
{
  double reference = cfg.target_speed;
  if (lead) {
    const double desired_gap = params.standstill_gap + params.time_gap * state.speed;
    const double gap_safe = std::max(0.0, lead->speed + params.gap_gain * (lead->gap - desired_gap));
    reference = std::min(reference, gap_safe);
  }
  double accel = params.kp * (reference - state.speed);
  accel = std::clamp(accel, -limits.max_decel, limits.max_accel);
  const double max_delta = limits.max_jerk * dt;
  return std::clamp(accel, state.acceleration - max_delta, state.acceleration + max_delta);
}

VehicleState integrate_ego(const VehicleState & state, double accel, double steering, double dt)
{
  VehicleState next = state;
  double travelled = 0.0;
  const double v1 = state.speed + accel * dt;
  if (v1 < 0.0) {
    travelled = accel < 0.0 ? state.speed * state.speed / (-2.0 * accel) : 0.0;
    next.speed = 0.0;
  } else {
    travelled = 0.5 * (state.speed + v1) * dt;
    next.speed = v1;
  }
  const double yaw_change = travelled * std::tan(steering) / state.wheelbase;
  const double mid_heading = state.heading + 0.5 * yaw_change;
  next.position = state.position + Vec2{std::cos(mid_heading), std::sin(mid_heading)} * travelled;
  next.heading = normalize_angle(state.heading + yaw_change);
  next.acceleration = accel;
  next.steering_angle = steering;
  return next;
}

const Polyline & active_path(const WorldState & world)
{
  if (world.lane_change) {
    return world.lane_change->path;
  }
  return world.scenario->tracks[static_cast<std::size_t>(world.ego_lane)];
}

std::optional<LeadInfo> find_lead(const WorldState & world)
{
  const Polyline & lane = world.scenario->tracks[static_cast<std::size_t>(world.ego_lane)];
  const double ego_s = lane.project(world.ego.position).s;
  std::optional<LeadInfo> lead;
  for (const auto & actor : world.actors) {
    if (actor.lane_id != world.ego_lane) {
      continue;
    }
    double ds = actor.s - ego_s;
    if (lane.closed()) {
      ds = lane.wrap(ds);
    }
    if (ds > 0.0 && (!lead || ds < lead->gap)) {
      lead = LeadInfo{ds, actor.speed};
    }
  }
  return lead;
}

bool request_lane_change(WorldState & world, int to_lane, double duration)
{
  const auto & tracks = world.scenario->tracks;
  if (to_lane < 0 || static_cast<std::size_t>(to_lane) >= tracks.size() || to_lane == world.ego_lane ||
      !(duration > 0.0)) {
    return false;
  }
  const Polyline & from = active_path(world);
  const Polyline & to = tracks[static_cast<std::size_t>(to_lane)];
  const double s0 = from.project(world.ego.position).s;
  const double blend = std::max(10.0, world.ego.speed * duration);
  if (from.closed() || to.closed() || s0 + blend >= from.length()) {
    return false;
  }
  // Only parallel lanes: the heading of both tracks must agree along the blend.
  const double h_from = from.heading_at(s0);
  const double h_to = to.heading_at(to.project(from.point_at(s0)).s);
  if (std::abs(normalize_angle(h_from - h_to)) > 0.05) {
    return false;
  }
  constexpr double kSpacing = 1.0;
  std::vector<Vec2> pts;
  const auto n = static_cast<std::size_t>(std::ceil(blend / kSpacing));
  double s_to_end = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(n);
    const double w = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
    const Vec2 a = from.point_at(s0 + u * blend);
    const Projection on_to = to.project(a);
    pts.push_back(a + (on_to.point - a) * w);
    s_to_end = on_to.s;
  }
  for (double s = s_to_end + 5.0; s < to.length(); s += 5.0) {
    pts.push_back(to.point_at(s));
  }
  if (to.length() - s_to_end > 1e-6) {
    pts.push_back(to.points().back());
  }
  LaneChange change;
  change.from_lane = world.ego_lane;
  change.to_lane = to_lane;
  change.length = blend;
  change.path = Polyline(std::move(pts));
  world.lane_change = std::move(change);
  world.ego_lane = to_lane;
  return true;
}

WorldState step(const WorldState & world, double dt, const VehicleLimits & limits)
{
  if (!(dt > 0.0 && dt <= 0.1)) {
    throw std::invalid_argument("step dt must be in (0, 0.1]");
  }
  WorldState next = world;
  const std::optional<LeadInfo> lead = find_lead(world);

  double steering = 0.0;
  double accel = 0.0;
  if (next.engaged) {
    try {
      steering = pure_pursuit_steering(world.ego, active_path(world), world.tracking);
    } catch (const NoLookaheadPoint &) {
      next.engaged = false;
      next.route_finished = true;
    }
  }
  if (next.engaged) {
    accel = speed_controller(world.ego, world.tracking, lead, dt, limits);
  } else if (world.ego.speed > 0.0) {
    // Coasting: constant deceleration, jerk-limited on entry.
    accel = std::max(-limits.coast_decel, world.ego.acceleration - limits.max_jerk * dt);
  }
  steering = std::clamp(steering, -limits.max_steering, limits.max_steering);
  next.ego = integrate_ego(world.ego, accel, steering, dt);

  if (next.lane_change) {
    const double progress = next.lane_change->path.project(next.ego.position).s;
    if (progress >= next.lane_change->length) {
      next.lane_change.reset();
    }
  }

  const double t1 = world.time + dt;
  for (auto & actor : next.actors) {
    const Polyline & lane = world.scenario->tracks[static_cast<std::size_t>(actor.lane_id)];
    const double v1 = profile_speed(actor.speed_profile, t1, actor.speed);
    actor.s = lane.closed() ? lane.wrap(actor.s + 0.5 * (actor.speed + v1) * dt)
                            : std::min(lane.length(), actor.s + 0.5 * (actor.speed + v1) * dt);
    actor.speed = v1;
    actor.position = lane.point_at(actor.s);
  }
  next.time = t1;
  ++next.step_count;
  return next;
}

}  // namespace lmpdrive
