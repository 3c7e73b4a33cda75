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

#include <chrono>
#include <memory>
#include <thread>

#include "doctest.h"
#include "lmpdrive/context.hpp"
#include "lmpdrive/executor.hpp"

using namespace lmpdrive;
using namespace std::chrono_literals;

namespace
{

class FixedSource : public EnvironmentSource
{
public:
  FixedSource(std::optional<std::string> weather, std::chrono::milliseconds delay = 0ms)
  : weather_(std::move(weather)), delay_(delay)
  {
  }
  std::string name() const override { return "fixed"; }
  std::optional<std::string> weather(Vec2) override
  {
    std::this_thread::sleep_for(delay_);
    return weather_;
  }
  std::optional<RoadInfo> road(Vec2) override { return std::nullopt; }
  std::optional<std::string> traffic(Vec2) override { return std::nullopt; }

private:
  std::optional<std::string> weather_;
  std::chrono::milliseconds delay_;
};

class ThrowingSource : public FixedSource
{
public:
  ThrowingSource() : FixedSource("never") {}
  std::optional<std::string> weather(Vec2) override { throw std::runtime_error("boom"); }
};

WorldState highway_world()
{
  auto sc = std::make_shared<const Scenario>(make_highway_scenario(1));
  return make_world(sc, to_tracking(sc->initial_follower));
}

}  // namespace

TEST_CASE("render_context emits the fixed sentence order")
{
  ContextSnapshot s;
  s.lead_speed = 38.0;
  s.ego_speed = 40.0;
  s.speed_limit = 60.0;
  s.weather = "sunny";
  s.road_type = "highway";
  s.traffic_level = "light";
  CHECK(render_context(s) ==
        "A vehicle in front of you is running at 38.0 km/h.\n"
        "Your current speed is 40.0 km/h.\n"
        "The speed limit is 60.0 km/h.\n"
        "The weather is sunny.\n"
        "You are driving on a highway.\n"
        "Traffic is light.");

  s.lead_speed.reset();
  CHECK(render_context(s).rfind("Your current speed is 40.0 km/h.", 0) == 0);
}

TEST_CASE("parse_context recovers the one-decimal numbers")
{
  ContextSnapshot s;
  s.lead_speed = 37.96;
  s.ego_speed = 12.34;
  s.speed_limit = 50.0;
  s.weather = "snowy";
  s.road_type = "urban road";
  s.traffic_level = "heavy";
  const auto back = parse_context(render_context(s));
  REQUIRE(back);
  CHECK(*back->lead_speed == doctest::Approx(38.0));
  CHECK(back->ego_speed == doctest::Approx(12.3));
  CHECK(back->speed_limit == 50.0);
  CHECK(back->weather == "snowy");
  CHECK(back->road_type == "urban road");
  CHECK(back->traffic_level == "heavy");
  CHECK(render_context(*back) == render_context(s));
  CHECK_FALSE(parse_context("Your current speed is fast km/h.").has_value());
  CHECK_FALSE(parse_context("nothing useful").has_value());
}

TEST_CASE("gather reads kinematics from the world and facts from the scenario")
{
  const auto world = highway_world();
  const auto snap = gather(world, {});
  CHECK(snap.ego_speed == doctest::Approx(40.0));
  CHECK(snap.speed_limit == 60.0);
  CHECK(snap.weather == "sunny");
  REQUIRE(snap.lead_speed);
  CHECK(*snap.lead_speed == doctest::Approx(58.0).epsilon(0.02));
  REQUIRE(snap.lead_gap);
}

TEST_CASE("first source with an answer wins; silence falls back")
{
  const auto world = highway_world();
  std::vector<std::shared_ptr<EnvironmentSource>> sources = {
    std::make_shared<FixedSource>(std::nullopt), std::make_shared<FixedSource>("rainy"),
    std::make_shared<FixedSource>("foggy")};
  CHECK(gather(world, sources).weather == "rainy");

  sources = {std::make_shared<ThrowingSource>(), std::make_shared<FixedSource>(std::nullopt)};
  CHECK(gather(world, sources).weather == "sunny");
}

TEST_CASE("a stalled source does not hold gather past the budget")
{
  const auto world = highway_world();
  std::vector<std::shared_ptr<EnvironmentSource>> sources = {std::make_shared<FixedSource>("stormy", 400ms)};
  const auto start = std::chrono::steady_clock::now();
  const auto snap = gather(world, sources, GatherOptions{30ms});
  const auto took = std::chrono::steady_clock::now() - start;
  CHECK(snap.weather == "sunny");
  CHECK(took < 300ms);
}

TEST_CASE("file source zones override the top level")
{
  const auto src = FileSource::from_json(R"({
    "weather": "cloudy", "speed_limit": 50, "road_type": "arterial",
    "zones": [{"x_min": 100, "x_max": 200, "weather": "snowy", "speed_limit": 30}]
  })");
  CHECK(*src->weather({0.0, 0.0}) == "cloudy");
  CHECK(*src->weather({150.0, 0.0}) == "snowy");
  CHECK(src->road({150.0, 0.0})->speed_limit == 30.0);
  CHECK(src->road({150.0, 0.0})->road_type == "arterial");
  CHECK_FALSE(src->traffic({0.0, 0.0}).has_value());
  CHECK_THROWS(FileSource::from_json("{not json"));
}

TEST_CASE("http weather source is unavailable without configuration or server")
{
  HttpWeatherSource src("http://127.0.0.1:1", "key", 100ms);
  CHECK_FALSE(src.weather({0.0, 0.0}).has_value());
}
