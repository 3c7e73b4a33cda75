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

#include <cmath>
#include <memory>
#include <numbers>

#include "doctest.h"
#include "lmpdrive/executor.hpp"
#include "lmpdrive/geometry.hpp"
#include "lmpdrive/sim.hpp"
#include "support.hpp"

using namespace lmpdrive;

namespace
{

std::shared_ptr<const Scenario> circle_scenario(double radius, double kmh)
{
  auto sc = std::make_shared<Scenario>();
  sc->tracks = {make_circle({0.0, 0.0}, radius, 1440)};
  sc->speed_limit = 60.0;
  sc->initial_follower = {kmh, 6.0, 1.0, 1};
  return sc;
}

std::shared_ptr<const Scenario> straight_scenario(double kmh)
{
  auto sc = std::make_shared<Scenario>();
  sc->tracks = {make_line({0.0, 0.0}, 0.0, 2000.0, 5.0)};
  sc->initial_follower = {kmh, 6.0, 1.0, 1};
  return sc;
}

}  // namespace

TEST_CASE("normalize_angle wraps into (-pi, pi]")
{
  CHECK(normalize_angle(3.0 * std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(normalize_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(normalize_angle(0.25) == doctest::Approx(0.25));
  CHECK(normalize_angle(-7.0) == doctest::Approx(-7.0 + 2.0 * std::numbers::pi));
}

TEST_CASE("polyline rejects degenerate input")
{
  CHECK_THROWS_AS(Polyline({{0.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(Polyline({{0.0, 0.0}, {0.0, 0.0}}), std::invalid_argument);
}

TEST_CASE("polyline projection and arc length")
{
  const Polyline line = make_line({0.0, 0.0}, 0.0, 100.0, 10.0);
  CHECK(line.length() == doctest::Approx(100.0));
  const auto p = line.project({42.0, 3.0});
  CHECK(p.s == doctest::Approx(42.0));
  CHECK(p.lateral == doctest::Approx(3.0));
  CHECK(line.project({42.0, -2.0}).lateral == doctest::Approx(-2.0));
  CHECK(line.point_at(250.0).x == doctest::Approx(100.0));

  const Polyline circle = make_circle({0.0, 0.0}, 10.0, 360);
  CHECK(circle.closed());
  CHECK(circle.length() == doctest::Approx(2.0 * std::numbers::pi * 10.0).epsilon(1e-3));
  CHECK(circle.wrap(circle.length() + 1.0) == doctest::Approx(1.0));
}

TEST_CASE("circle intersection finds the point at the lookahead radius")
{
  const Polyline line = make_line({0.0, 0.0}, 0.0, 100.0, 1.0);
  const auto hit = line.circle_intersection({10.0, 0.0}, 5.0, 10.0);
  REQUIRE(hit);
  CHECK(hit->x == doctest::Approx(15.0));
  CHECK_FALSE(line.circle_intersection({98.0, 0.0}, 5.0, 98.0).has_value());
}

TEST_CASE("effective lookahead is max(distance, ratio * speed)")
{
  TrackingConfig cfg{10.0, 6.0, 2.0, 1};
  CHECK(effective_lookahead(cfg, 1.0) == 6.0);
  CHECK(effective_lookahead(cfg, 5.0) == 10.0);
}

TEST_CASE("pure pursuit on a circle matches the arc curvature")
{
  // Vehicle on the circle, tangent heading: lookahead chord gives sin(alpha) = ld / 2R.
  const double radius = 20.0;
  const Polyline circle = make_circle({0.0, 0.0}, radius, 7200);
  VehicleState state;
  state.position = {radius, 0.0};
  state.heading = std::numbers::pi / 2.0;
  state.speed = 5.0;
  const TrackingConfig cfg{5.0, 8.0, 1.0, 1};
  const double expected = std::atan(state.wheelbase / radius);
  CHECK(pure_pursuit_steering(state, circle, cfg) == doctest::Approx(expected).epsilon(1e-3));
}

TEST_CASE("closed-loop circle tracking settles at atan(L/R)")
{
  auto world = make_world(circle_scenario(20.0, 18.0), {5.0, 6.0, 1.0, 1});
  world.ego.position = {20.0, 0.0};
  world.ego.heading = std::numbers::pi / 2.0;
  for (int i = 0; i < 500; ++i) {
    world = step(world, 0.02);
  }
  CHECK(world.ego.steering_angle == doctest::Approx(std::atan(world.ego.wheelbase / 20.0)).epsilon(0.05));
}

TEST_CASE("straight-track lateral offset decays")
{
  auto world = make_world(straight_scenario(18.0), {5.0, 6.0, 1.0, 1});
  world.ego.position = {10.0, 1.0};
  const Polyline & track = world.scenario->tracks[0];
  for (int i = 0; i < 1000; ++i) {
    world = step(world, 0.02);
  }
  CHECK(std::abs(track.project(world.ego.position).lateral) < 0.1);
}

TEST_CASE("kinematic integration on a straight line")
{
  VehicleState s;
  s.speed = 10.0;
  const auto next = integrate_ego(s, 1.0, 0.0, 1.0);
  CHECK(next.position.x == doctest::Approx(10.5));
  CHECK(next.position.y == doctest::Approx(0.0));
  CHECK(next.speed == doctest::Approx(11.0));

  // Braking through zero stops at zero after v^2 / 2a.
  const auto stop = integrate_ego(s, -5.0, 0.0, 3.0);
  CHECK(stop.speed == 0.0);
  CHECK(stop.position.x == doctest::Approx(10.0));
}

TEST_CASE("step enforces the dt precondition")
{
  auto world = make_world(straight_scenario(20.0), {5.0, 6.0, 2.0, 1});
  CHECK_THROWS_AS(step(world, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(step(world, 0.2), std::invalid_argument);
  CHECK_NOTHROW(step(world, 0.1));
}

TEST_CASE("speed controller respects accel and jerk limits")
{
  VehicleState s;
  s.speed = 0.0;
  const TrackingConfig cfg{30.0, 6.0, 2.0, 1};
  const VehicleLimits limits;
  const double a = speed_controller(s, cfg, std::nullopt, 0.02, limits);
  CHECK(a == doctest::Approx(limits.max_jerk * 0.02));
  s.acceleration = 1.99;
  CHECK(speed_controller(s, cfg, std::nullopt, 0.02, limits) == doctest::Approx(limits.max_accel));

  // A stopped lead close ahead demands braking.
  s.speed = 10.0;
  s.acceleration = 0.0;
  const double brake = speed_controller(s, cfg, LeadInfo{6.0, 0.0}, 0.02, limits);
  CHECK(brake < 0.0);
}

TEST_CASE("disengaged vehicle coasts to a stop")
{
  auto world = make_world(straight_scenario(36.0), {10.0, 6.0, 2.0, 1});
  world.engaged = false;
  for (int i = 0; i < 1000 && world.ego.speed > 0.0; ++i) {
    world = step(world, 0.02);
  }
  CHECK(world.ego.speed == 0.0);
}

TEST_CASE("end of an open route disengages")
{
  auto sc = std::make_shared<Scenario>();
  sc->tracks = {make_line({0.0, 0.0}, 0.0, 60.0, 5.0)};
  sc->initial_follower = {36.0, 6.0, 1.0, 1};
  auto world = make_world(sc, to_tracking(sc->initial_follower));
  for (int i = 0; i < 1500 && !world.route_finished; ++i) {
    world = step(world, 0.02);
  }
  CHECK(world.route_finished);
  CHECK_FALSE(world.engaged);
}

TEST_CASE("actors follow their speed profile")
{
  CHECK(profile_speed({{0.0, 10.0}, {10.0, 20.0}}, 5.0, 0.0) == doctest::Approx(15.0));
  CHECK(profile_speed({{0.0, 10.0}, {10.0, 20.0}}, 50.0, 0.0) == doctest::Approx(20.0));
  CHECK(profile_speed({}, 3.0, 7.0) == 7.0);
}

TEST_CASE("highway lead is found in the ego lane")
{
  auto sc = std::make_shared<const Scenario>(make_highway_scenario(3));
  const auto world = make_world(sc, {40.0 / 3.6, 12.0, 2.0, 1});
  const auto lead = find_lead(world);
  REQUIRE(lead);
  CHECK(lead->gap > 150.0);
}

TEST_CASE("lane change moves the ego to the target lane")
{
  auto sc = std::make_shared<const Scenario>(make_highway_scenario(0));
  auto world = make_world(sc, {40.0 / 3.6, 12.0, 2.0, 1});
  CHECK_FALSE(request_lane_change(world, 7, 4.0));
  REQUIRE(request_lane_change(world, 0, 4.0));
  for (int i = 0; i < 500; ++i) {
    world = step(world, 0.02);
  }
  CHECK(world.ego_lane == 0);
  CHECK(std::abs(sc->tracks[0].project(world.ego.position).lateral) < 0.2);
}

TEST_CASE("scenario documents round-trip")
{
  const Scenario original = make_intersection_scenario(5);
  const Scenario back = parse_scenario(serialize_scenario(original));
  CHECK(back.kind == original.kind);
  CHECK(back.speed_limit == original.speed_limit);
  CHECK(back.tracks.size() == original.tracks.size());
  CHECK(back.actors.size() == original.actors.size());
  CHECK(serialize_scenario(back) == serialize_scenario(original));

  const Scenario file = load_scenario_file(testing::source_path("fixtures/scenarios/two_lane_rain.scenario").string());
  CHECK(file.weather == "rainy");
  CHECK(file.tracks.size() == 2);

  CHECK_THROWS_AS(parse_scenario("kind = highway\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_scenario("format = lmpdrive-scenario\nversion = 1\nbogus = 1\n"), std::invalid_argument);
}
