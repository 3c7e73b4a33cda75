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

#ifndef LMPDRIVE__SIM_HPP_
#define LMPDRIVE__SIM_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lmpdrive/geometry.hpp"

namespace lmpdrive
{

inline constexpr double kDefaultStepSeconds = 0.02;
inline constexpr double kKmhPerMps = 3.6;

struct VehicleState
{
  Vec2 position;
  double heading{0.0};         // rad, (-pi, pi]
  double speed{0.0};           // m/s, >= 0
  double acceleration{0.0};    // m/s^2
  double steering_angle{0.0};  // rad
  double wheelbase{2.79};      // m
};

struct VehicleLimits
{
  double max_steering{0.61};
  double max_accel{2.0};
  double max_decel{3.0};
  double max_jerk{2.5};
  double coast_decel{2.0};
};

struct SpeedBreakpoint
{
  double time{0.0};   // s
  double speed{0.0};  // m/s
};

struct ActorState
{
  Vec2 position;
  double speed{0.0};
  int lane_id{0};
  std::vector<SpeedBreakpoint> speed_profile;
  double s{0.0};  ///< arc length along the lane track
};

/// Waypoint-follower parameters as the LMPs express them (velocity in km/h).
struct FollowerConfig
{
  double target_velocity{0.0};  // km/h
  double lookahead_distance{6.0};
  double lookahead_ratio{2.0};
  int param_flag{1};

  friend bool operator==(const FollowerConfig &, const FollowerConfig &) = default;
};

/// Controller-side view of FollowerConfig in SI units.
struct TrackingConfig
{
  double target_speed{0.0};  // m/s
  double lookahead_distance{6.0};
  double lookahead_ratio{2.0};
  int param_flag{1};

  friend bool operator==(const TrackingConfig &, const TrackingConfig &) = default;
};

enum class ScenarioKind { kHighway, kIntersection, kParking };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string & text);

struct Scenario
{
  ScenarioKind kind{ScenarioKind::kHighway};
  std::vector<Polyline> tracks;  ///< indexed by lane id
  double speed_limit{60.0};      // km/h
  std::vector<ActorState> actors;
  std::string weather{"sunny"};
  std::string road_type{"highway"};
  std::string traffic_level{"light"};
  int ego_lane{0};
  double ego_start_s{0.0};
  FollowerConfig initial_follower;

  /// Throws std::invalid_argument describing the first broken invariant.
  void validate() const;
};

/// Built-in scenarios. The seed perturbs actor profiles only; ego setup is fixed.
Scenario make_highway_scenario(std::uint64_t seed = 0);
Scenario make_intersection_scenario(std::uint64_t seed = 0);
Scenario make_parking_scenario(std::uint64_t seed = 0);
Scenario make_scenario(ScenarioKind kind, std::uint64_t seed = 0);

/// Versioned key/value scenario documents (see docs/scenario-format.md).
Scenario parse_scenario(const std::string & text);
std::string serialize_scenario(const Scenario & scenario);
Scenario load_scenario_file(const std::string & path);

struct LaneChange
{
  int from_lane{0};
  int to_lane{0};
  double length{0.0};  ///< arc length of the blend on `path`
  Polyline path;
};

struct LeadInfo
{
  double gap{0.0};    // m, center to center along the lane
  double speed{0.0};  // m/s
};

struct WorldState
{
  std::shared_ptr<const Scenario> scenario;
  double time{0.0};
  std::uint64_t step_count{0};
  VehicleState ego;
  int ego_lane{0};
  std::vector<ActorState> actors;
  bool engaged{true};
  TrackingConfig tracking;
  std::optional<LaneChange> lane_change;
  bool route_finished{false};
};

WorldState make_world(std::shared_ptr<const Scenario> scenario, const TrackingConfig & tracking);

/// Thrown when no lookahead point remains on the track (end of route).
class NoLookaheadPoint : public std::runtime_error
{
public:
  NoLookaheadPoint() : std::runtime_error("no lookahead point left on track") {}
};

/// max(lookahead_distance, lookahead_ratio * speed)
double effective_lookahead(const TrackingConfig & cfg, double speed);

/// Pure-pursuit steering angle toward the lookahead point on `track`.
double pure_pursuit_steering(const VehicleState & state, const Polyline & track, const TrackingConfig & cfg);

struct SpeedControlParams
{
  double kp{0.6};
  double standstill_gap{5.0};
  double time_gap{1.5};
  double gap_gain{0.25};
};

/// Proportional speed tracking of min(target, gap-safe speed), clamped to the
/// vehicle's acceleration and jerk limits relative to `state.acceleration`.
double speed_controller(
  const VehicleState & state, const TrackingConfig & cfg, const std::optional<LeadInfo> & lead, double dt,
  const VehicleLimits & limits = {}, const SpeedControlParams & params = {});

/// Raw kinematic bicycle integration; accel and steering are applied as given.
VehicleState integrate_ego(const VehicleState & state, double accel, double steering, double dt);

/// Actor speed from its profile at time t (linear interpolation, held at the ends).
double profile_speed(const std::vector<SpeedBreakpoint> & profile, double t, double fallback);

std::optional<LeadInfo> find_lead(const WorldState & world);
const Polyline & active_path(const WorldState & world);

/// Starts a lane change to `to_lane` blended with a quintic lateral profile.
/// Returns false when the target lane does not exist or is not parallel.
bool request_lane_change(WorldState & world, int to_lane, double duration);

/// Advances the world by dt in (0, 0.1]. Throws std::invalid_argument otherwise.
WorldState step(const WorldState & world, double dt, const VehicleLimits & limits = {});

}  // namespace lmpdrive

#endif  // LMPDRIVE__SIM_HPP_
