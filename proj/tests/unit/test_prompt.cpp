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

#include <random>
#include <string>

#include "doctest.h"
#include "lmpdrive/prompt.hpp"

using namespace lmpdrive;

namespace
{

std::string random_text(std::mt19937_64 & rng)
{
  static const std::string pieces[] = {"### SYSTEM", "### MEMORY", "###", "\\", "\\###", "\n", "\n\n", "a", "Command: x",
                                       " ", "Action:", "\\\\### COMMAND", "km/h", "\"{}\"", "---", "\t"};
  std::uniform_int_distribution<std::size_t> pick(0, std::size(pieces) - 1);
  std::uniform_int_distribution<int> len(0, 30);
  std::string out;
  for (int i = len(rng); i > 0; --i) {
    out += pieces[pick(rng)];
  }
  return out;
}

}  // namespace

TEST_CASE("embedded exemplars parse into complete triples")
{
  const auto ex = default_exemplars();
  REQUIRE(ex.size() >= 3);
  for (const auto & e : ex) {
    CHECK_FALSE(e.query.empty());
    CHECK_FALSE(e.thought.empty());
    CHECK(e.action.find("rostopic pub") != std::string::npos);
  }
}

TEST_CASE("exemplar parser rejects incomplete blocks")
{
  CHECK_THROWS_AS(parse_exemplars("Query: a\nThought: b\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_exemplars("Query: a\nThought:\nAction: c\n"), std::invalid_argument);
  const auto two = parse_exemplars("Query: a\nThought: b\nAction: c\nd\n---\nQuery: e\nThought: f\nAction: g\n");
  REQUIRE(two.size() == 2);
  CHECK(two[0].action == "c\nd");
}

TEST_CASE("system message carries capabilities, exemplars and the output contract")
{
  const Scenario sc = make_intersection_scenario(0);
  const auto msg = build_system_message(sc, default_exemplars());
  const std::string text = render_system_message(msg);
  CHECK(text.find(std::string(prompt_assets::capability_preamble()).substr(0, 20)) != std::string::npos);
  CHECK(text.find("intersection") != std::string::npos);
  CHECK(text.find(std::string(kExemplarIntro)) != std::string::npos);
  CHECK(text.find("Query: " + default_exemplars()[0].query) != std::string::npos);
  CHECK(text.find(msg.output_format_contract) != std::string::npos);
  CHECK(msg.output_format_contract.find("40") != std::string::npos);
  CHECK_THROWS_AS(build_system_message(sc, {}), std::invalid_argument);
}

TEST_CASE("system message does not depend on actors")
{
  Scenario a = make_highway_scenario(0);
  Scenario b = a;
  b.actors.clear();
  CHECK(render_system_message(build_system_message(a, default_exemplars())) ==
        render_system_message(build_system_message(b, default_exemplars())));
}

TEST_CASE("memory section renders, windows and parses back")
{
  CHECK(render_memory({}) == std::string(kNoHistorySentence));
  CHECK(parse_memory(render_memory({})).empty());

  std::vector<MemoryRecord> records;
  for (int i = 1; i <= 12; ++i) {
    MemoryRecord r;
    r.record_id = static_cast<std::uint64_t>(i);
    r.command = "command " + std::to_string(i);
    r.lmp = "rostopic pub /vehicle/engage std_msgs/Bool \"data: true\"";
    if (i % 2 == 0) {
      r.feedback = "too fast";
    }
    if (i == 12) {
      r.verdict = "parameter_rejected";
    }
    records.push_back(r);
  }
  const std::string text = render_memory(records, 10);
  CHECK(text.find("command 2\n") == std::string::npos);
  const auto entries = parse_memory(text);
  REQUIRE(entries.size() == 10);
  CHECK(entries.front().command == "command 3");
  CHECK_FALSE(entries.front().evaluation.has_value());
  CHECK(*entries[1].evaluation == "too fast");
  CHECK(entries.back().action == records.back().lmp);
  CHECK_FALSE(entries.back().executed);
  CHECK(entries[8].executed);
  CHECK(text.find("most recent feedback") != std::string::npos);
}

TEST_CASE("unparseable stored programs are marked in memory")
{
  MemoryRecord r;
  r.command = "faster";
  r.lmp = "I cannot do that";
  r.verdict = "format_rejected";
  const auto text = render_memory({r});
  CHECK(text.find("(program could not be parsed)") != std::string::npos);
  CHECK(text.find("I cannot do that") == std::string::npos);
}

TEST_CASE("assemble validates the command and fills empty memory")
{
  const auto sys = build_system_message(make_highway_scenario(0), default_exemplars());
  CHECK_THROWS_AS(assemble("", sys, "ctx", ""), std::invalid_argument);
  CHECK_THROWS_AS(assemble("   ", sys, "ctx", ""), std::invalid_argument);
  const auto b = assemble("drive faster", sys, "ctx", "");
  CHECK(b.memory == std::string(kNoHistorySentence));
  const auto msgs = to_chat_messages(b);
  REQUIRE(msgs.size() == 2);
  CHECK(msgs[0].role == "system");
  CHECK(msgs[0].content == render_system_message(sys));
  CHECK(msgs[1].role == "user");
  const auto mem = msgs[1].content.find("### MEMORY");
  const auto ctx = msgs[1].content.find("### CONTEXT");
  const auto cmd = msgs[1].content.find("### COMMAND");
  CHECK(mem < ctx);
  CHECK(ctx < cmd);
}

TEST_CASE("bundle serialization splits back exactly, whatever the section text")
{
  std::mt19937_64 rng(2024);
  auto sys = build_system_message(make_highway_scenario(0), default_exemplars());
  for (int i = 0; i < 500; ++i) {
    PromptBundle b;
    b.system = sys;
    b.system.capability_preamble = random_text(rng);
    b.memory = random_text(rng);
    b.context = random_text(rng);
    b.command = "x" + random_text(rng);
    const auto split = split_bundle(serialize_bundle(b));
    REQUIRE(split);
    CHECK(split->system == render_system_message(b.system));
    CHECK(split->memory == b.memory);
    CHECK(split->context == b.context);
    CHECK(split->command == b.command);

    const auto user = split_bundle(render_user_turn(b));
    REQUIRE(user);
    CHECK(user->system.empty());
    CHECK(user->command == b.command);
  }
  CHECK_FALSE(split_bundle("### COMMAND\nx\n### MEMORY\ny\n").has_value());
  CHECK_FALSE(split_bundle("no headers").has_value());
}
