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
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "lmpdrive/memory_store.hpp"
#include "support.hpp"

using namespace lmpdrive;
using lmpdrive::testing::read_file;
using lmpdrive::testing::TempDir;
using lmpdrive::testing::write_file;

TEST_CASE("append then feedback round-trips through a fresh store")
{
  TempDir dir;
  {
    MemoryStore store(dir.path());
    CHECK(store.append_interaction("alice", 1, "drive faster", "P1") == 1);
    CHECK(store.append_interaction("alice", 1, "slow down", "P2", "parameter_rejected") == 2);
    CHECK(store.attach_feedback("alice", "A little bit too fast.") == 2);
  }
  MemoryStore reopened(dir.path());
  const auto history = reopened.load_history("alice", 10);
  REQUIRE(history.size() == 2);
  CHECK(history[0].command == "drive faster");
  CHECK_FALSE(history[0].feedback.has_value());
  CHECK(history[1].verdict == "parameter_rejected");
  REQUIRE(history[1].feedback);
  CHECK(*history[1].feedback == "A little bit too fast.");
  CHECK(history[1].timestamp.size() == 20);
  CHECK(history[1].timestamp.back() == 'Z');
}

TEST_CASE("feedback with empty history is NoPendingInteraction")
{
  TempDir dir;
  MemoryStore store(dir.path());
  CHECK_THROWS_AS(store.attach_feedback("nobody", "too fast"), NoPendingInteraction);
}

TEST_CASE("feedback is set once")
{
  TempDir dir;
  MemoryStore store(dir.path());
  store.append_interaction("bob", 1, "faster", "P");
  store.attach_feedback("bob", "too slow");
  CHECK_THROWS_AS(store.attach_feedback("bob", "too fast"), NoPendingInteraction);
  CHECK(*store.load_history("bob", 1)[0].feedback == "too slow");
}

TEST_CASE("history window keeps the newest records in order")
{
  TempDir dir;
  MemoryStore store(dir.path());
  for (int i = 1; i <= 15; ++i) {
    store.append_interaction("carol", 1, "c" + std::to_string(i), "P");
  }
  const auto last = store.load_history("carol", 10);
  REQUIRE(last.size() == 10);
  CHECK(last.front().command == "c6");
  CHECK(last.back().command == "c15");
  CHECK(last.back().record_id == 15);
  CHECK(store.load_history("unknown", 10).empty());
  CHECK_FALSE(store.has_driver("unknown"));
}

TEST_CASE("torn trailing line is dropped and appends stay aligned")
{
  TempDir dir;
  std::filesystem::path path;
  {
    MemoryStore store(dir.path());
    store.append_interaction("dana", 1, "first", "P1");
    path = store.profile_path("dana");
  }
  const std::string clean = read_file(path);
  write_file(path, clean + "{\"type\":\"interaction\",\"record_id\":2,\"comm");
  CHECK(parse_profile(read_file(path)).records.size() == 1);

  MemoryStore store(dir.path());
  CHECK(store.append_interaction("dana", 1, "second", "P2") == 2);
  const auto body = read_file(path);
  CHECK(body.find("\"comm\n") == std::string::npos);
  const auto history = store.load_history("dana", 10);
  REQUIRE(history.size() == 2);
  CHECK(history[1].command == "second");
}

TEST_CASE("corrupt interior line is a storage failure")
{
  const std::string header = "{\"format\":\"lmpdrive-memory\",\"version\":1,\"driver_id\":\"x\"}\n";
  CHECK_THROWS_AS(parse_profile(header + "not json\n"), StorageFailure);
  CHECK_THROWS_AS(parse_profile("{\"type\":\"interaction\"}\n"), StorageFailure);
}

TEST_CASE("export and import are byte-for-byte")
{
  TempDir dir;
  TempDir other;
  MemoryStore store(dir.path());
  store.append_interaction("eve", 1, "faster", "P1");
  store.attach_feedback("eve", "too slow");
  store.append_interaction("eve", 2, "faster", "P2");
  const auto exported = other / "eve.jsonl";
  store.export_profile("eve", exported);
  CHECK(read_file(exported) == read_file(store.profile_path("eve")));

  MemoryStore target(other / "store");
  CHECK(target.import_profile(exported) == "eve");
  CHECK(read_file(target.profile_path("eve")) == read_file(exported));
  CHECK(target.load_history("eve", 10) == store.load_history("eve", 10));
  CHECK(target.drivers() == std::vector<std::string>{"eve"});

  CHECK_THROWS_AS(store.export_profile("ghost", other / "g.jsonl"), StorageFailure);
  write_file(other / "trunc.jsonl", "{\"format\"");
  CHECK_THROWS_AS(target.import_profile(other / "trunc.jsonl"), StorageFailure);
}

TEST_CASE("driver ids with path characters stay inside the data dir")
{
  TempDir dir;
  MemoryStore store(dir.path());
  store.append_interaction("../escape/me", 1, "faster", "P");
  const auto p = store.profile_path("../escape/me");
  CHECK(p.parent_path() == dir.path());
  CHECK(store.drivers() == std::vector<std::string>{"../escape/me"});
}

TEST_CASE("concurrent appends keep ids strictly increasing")
{
  TempDir dir;
  MemoryStore store(dir.path());
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&store] {
      for (int i = 0; i < 20; ++i) {
        store.append_interaction("fay", 1, "cmd", "P");
      }
    });
  }
  for (auto & t : threads) {
    t.join();
  }
  const auto profile = parse_profile(read_file(store.profile_path("fay")));
  REQUIRE(profile.records.size() == 80);
  for (std::size_t i = 0; i < profile.records.size(); ++i) {
    CHECK(profile.records[i].record_id == i + 1);
  }
}
