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

#include "lmpdrive/fuzz.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "lmpdrive/executor.hpp"
#include "lmpdrive/text.hpp"

namespace lmpdrive
{

namespace
{

template <typename T>
const T & pick(std::mt19937_64 & rng, const std::vector<T> & xs)
{
  return xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)];
}

std::string random_number(std::mt19937_64 & rng)
{
  static const std::vector<std::string> specials = {
    "0", "-0", "-1", "60", "60.0", "60.0000001", "59.999", "4", "3.999", "30", "30.5", "1", "0.999", "4.0001",
    "1e3", "-1e-9", "NaN", "nan", "inf", "-inf", "Infinity", "1e309", "0x10", "1.5.2", "", "\"30\"", "true",
    "null", "[30]", "{}", "+5", "00012", ".5", "5.", "1e", "--3"};
  std::uniform_int_distribution<int> mode(0, 3);
  switch (mode(rng)) {
    case 0:
      return pick(rng, specials);
    case 1:
      return std::to_string(std::uniform_int_distribution<int>(-20, 120)(rng));
    case 2:
      return format_double(std::uniform_real_distribution<double>(-10.0, 100.0)(rng));
    default:
      return format_double(std::uniform_real_distribution<double>(0.0, 8.0)(rng));
  }
}

std::string follower_text(std::mt19937_64 & rng)
{
  static const std::vector<std::string> keys = {"param_flag", "velocity", "lookahead_distance", "lookahead_ratio"};
  std::vector<std::string> fields;
  for (const auto & k : keys) {
    if (std::bernoulli_distribution(0.95)(rng)) {
      const std::string v = k == "param_flag" && std::bernoulli_distribution(0.7)(rng)
                              ? std::to_string(std::uniform_int_distribution<int>(-2, 3)(rng))
                              : random_number(rng);
      fields.push_back(k + "\\\": " + v);
    }
  }
  if (std::bernoulli_distribution(0.05)(rng)) {
    fields.push_back("max_speed\\\": 200");
  }
  std::shuffle(fields.begin(), fields.end(), rng);
  std::string body;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    body += (i ? ", \\\"" : "\\\"") + fields[i];
  }
  std::string topic(lmp_grammar::kFollowerTopic);
  if (std::bernoulli_distribution(0.03)(rng)) {
    topic = "/autoware_config_msgs/ConfigVelocitySet";
  }
  return "rostopic pub " + topic + " \"{" + body + "}\"\n";
}

std::string engage_text(std::mt19937_64 & rng)
{
  static const std::vector<std::string> data = {"data: true", "data: false", "data: maybe", "data: 1", ""};
  std::string out = std::bernoulli_distribution(0.5)(rng) ? "timeout 1s " : "";
  out += "rostopic pub ";
  out += lmp_grammar::kEngageTopic;
  out += " ";
  out += std::bernoulli_distribution(0.95)(rng) ? std::string(lmp_grammar::kEngageType) : "std_msgs/String";
  out += " \"" + pick(rng, data) + "\"\n";
  return out;
}

std::string mutate(std::string text, std::mt19937_64 & rng)
{
  static const std::string alphabet = "{}[]\":,\\ \n\t$#.-+eE0123456789abcdefxyz/_";
  const int edits = std::uniform_int_distribution<int>(1, 6)(rng);
  for (int i = 0; i < edits && !text.empty(); ++i) {
    const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, text.size() - 1)(rng);
    switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
      case 0:
        text.erase(pos, std::uniform_int_distribution<std::size_t>(1, 8)(rng));
        break;
      case 1:
        text.insert(pos, 1, alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)]);
        break;
      case 2:
        text[pos] = alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
        break;
      default:
        text = text.substr(0, pos);
        break;
    }
  }
  return text;
}

std::string noise(std::mt19937_64 & rng)
{
  const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 200)(rng);
  std::string out(n, '\0');
  for (auto & c : out) {
    c = static_cast<char>(std::uniform_int_distribution<int>(0, 255)(rng));
  }
  return out;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_bits(const FollowerConfig & a, const FollowerConfig & b)
{
  return same_bits(a.target_velocity, b.target_velocity) && same_bits(a.lookahead_distance, b.lookahead_distance) &&
         same_bits(a.lookahead_ratio, b.lookahead_ratio) && a.param_flag == b.param_flag;
}

bool same_bits(const TrackingConfig & a, const TrackingConfig & b)
{
  return same_bits(a.target_speed, b.target_speed) && same_bits(a.lookahead_distance, b.lookahead_distance) &&
         same_bits(a.lookahead_ratio, b.lookahead_ratio) && a.param_flag == b.param_flag;
}

}  // namespace

std::string random_lmp_text(std::mt19937_64 & rng)
{
  std::string program;
  switch (std::uniform_int_distribution<int>(0, 9)(rng)) {
    case 0:
      return noise(rng);
    case 1:
      return engage_text(rng);
    case 2:
    case 3:
      return follower_text(rng);
    case 4:
    case 5:
      program = engage_text(rng) + follower_text(rng);
      break;
    default:
      program = engage_text(rng) + follower_text(rng);
      return mutate(program, rng);
  }
  if (std::bernoulli_distribution(0.1)(rng)) {
    program = "Sure! Here is the program:\n" + program;
  }
  return program;
}

FuzzReport fuzz_gate(std::size_t count, std::uint64_t seed, const SafetyLimits & limits)
{
  limits.validate();
  FuzzReport report;
  std::mt19937_64 rng(seed);
  auto scenario = std::make_shared<const Scenario>(make_highway_scenario(seed));
  const FollowerConfig initial = scenario->initial_follower;
  const WorldState base = make_world(scenario, to_tracking(initial));

  for (std::size_t i = 0; i < count; ++i) {
    const std::string text = random_lmp_text(rng);
    ++report.cases;
    auto fail = [&](const std::string & problem) { report.failures.push_back({i, text, problem}); };
    try {
      GateResult gr = gate(text, limits);
      switch (gr.verdict.outcome) {
        case Outcome::kAccepted:
          ++report.accepted;
          break;
        case Outcome::kFormatRejected:
          ++report.format_rejected;
          break;
        case Outcome::kParameterRejected:
          ++report.parameter_rejected;
          break;
      }
      if (gr.verdict.accepted()) {
        if (!gr.lmp || (!gr.lmp->engage && !gr.lmp->follower)) {
          fail("accepted an empty program");
          continue;
        }
        if (const auto & f = gr.lmp->follower) {
          const bool flag_ok =
            std::find(limits.param_flags.begin(), limits.param_flags.end(), f->param_flag) != limits.param_flags.end();
          if (!limits.velocity().contains(f->target_velocity) ||
              !limits.lookahead_distance.contains(f->lookahead_distance) ||
              !limits.lookahead_ratio.contains(f->lookahead_ratio) || !flag_ok) {
            fail("accepted a value outside the safety limits");
          }
        }
        continue;
      }
      Executor executor(initial);
      WorldState world = base;
      const Lmp program = gr.lmp.value_or(Lmp{});
      executor.apply(program, gr.verdict, world);
      if (!same_bits(executor.current(), initial) || !same_bits(world.tracking, base.tracking) ||
          world.engaged != base.engaged) {
        fail("rejected program changed the follower state");
      }
    } catch (const std::exception & e) {
      fail(std::string("exception: ") + e.what());
    } catch (...) {
      fail("unknown exception");
    }
  }
  return report;
}

}  // namespace lmpdrive
