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

#include <memory>

#include "doctest.h"
#include "lmpdrive/scripted_driver.hpp"
#include "support.hpp"

using namespace lmpdrive;
using lmpdrive::testing::TempDir;

TEST_CASE("corpus parsing")
{
  const auto c = parse_corpus(
    "# comment\n"
    "\n"
    "5.0,II,command You are driving too conservatively.\n"
    "1.5,I,command Drive as fast as you can, please.\n"
    "9,-,evaluate too fast\n");
  REQUIRE(c.size() == 3);
  CHECK(c[0].time == 1.5);
  CHECK(c[0].utterance == "command Drive as fast as you can, please.");
  CHECK(c[2].level == "-");
  CHECK_THROWS_AS(parse_corpus("x,I,command go\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_corpus("1.0,IV,command go\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_corpus("1.0,I\n"), std::invalid_argument);

  const auto table = load_corpus_file(testing::source_path("corpora/highway_commands.corpus"));
  CHECK(table.size() == 5);
}

TEST_CASE("run_corpus speaks each line at its time and collects errors")
{
  TempDir dir;
  SessionConfig cfg;
  cfg.driver_id = "corpus";
  cfg.scenario = std::make_shared<const Scenario>(make_highway_scenario(0));
  Session s(cfg, std::make_shared<MemoryStore>(dir / "m"));
  const auto corpus = parse_corpus(
    "0.5,-,evaluate nothing to rate yet\n"
    "1.0,I,command Drive as fast as you can.\n"
    "6.0,-,evaluate too fast\n");
  const auto out = run_corpus(s, corpus, 10.0);
  REQUIRE(out.size() == 3);
  CHECK(out[0].error.has_value());
  CHECK(out[1].result->flow_id.has_value());
  CHECK(out[2].result->record_id.has_value());
  CHECK(s.follower().target_velocity == 60.0);
  CHECK(s.world().time == doctest::Approx(10.0));
}

TEST_CASE("scripted driver takes over once when out of band")
{
  TempDir dir;
  SessionConfig cfg;
  cfg.driver_id = "moderate";
  cfg.scenario = std::make_shared<const Scenario>(make_highway_scenario(0));
  Session s(cfg, std::make_shared<MemoryStore>(dir / "m"));
  PreferenceProfile p{"moderate", 42.0, 47.0, "can you drive faster", 2.0};
  ScriptedDriver driver(p, 3);
  CHECK(driver.command_time() >= 1.5);
  CHECK(driver.command_time() <= 2.5);
  for (int i = 0; i < 1000; ++i) {
    s.step();
    driver.observe(s);
  }
  CHECK(driver.took_over());
  CHECK(s.n_takeover() == 1);
  CHECK_FALSE(s.world().engaged);
}

TEST_CASE("profiles and the two-trip protocol")
{
  const auto profiles = default_preference_profiles();
  REQUIRE(profiles.size() == 3);
  for (const auto & p : profiles) {
    CAPTURE(p.name);
    TempDir on;
    const auto with = run_preference_trips(p, 1, true, 2, on.path());
    REQUIRE(with.takeovers.size() == 2);
    CHECK(with.takeovers[0] == 1);
    CHECK(with.takeovers[1] == 0);
    CHECK(with.applied[1].target_velocity >= p.band_lo);
    CHECK(with.applied[1].target_velocity <= p.band_hi);

    TempDir off;
    const auto without = run_preference_trips(p, 1, false, 2, off.path());
    CHECK(without.takeovers[0] == without.takeovers[1]);
  }
}
