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

#include "lmpdrive/scripted_driver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lmpdrive/text.hpp"

namespace lmpdrive
{

std::vector<CorpusEntry> parse_corpus(const std::string & text)
{
  std::vector<CorpusEntry> out;
  const auto lines = split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string line = trim(lines[n]);
    if (line.empty() || line.front() == '#') {
      continue;
    }
    const auto where = "corpus line " + std::to_string(n + 1) + ": ";
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw std::invalid_argument(where + "expected time_s,level,utterance");
    }
    CorpusEntry e;
    const auto t = parse_double(trim(line.substr(0, c1)));
    if (!t || !std::isfinite(*t) || *t < 0.0) {
      throw std::invalid_argument(where + "time must be a number >= 0");
    }
    e.time = *t;
    e.level = trim(line.substr(c1 + 1, c2 - c1 - 1));
    if (e.level != "I" && e.level != "II" && e.level != "III" && e.level != "-") {
      throw std::invalid_argument(where + "level must be I, II, III or -");
    }
    e.utterance = trim(line.substr(c2 + 1));
    if (e.utterance.empty()) {
      throw std::invalid_argument(where + "utterance is empty");
    }
    out.push_back(std::move(e));
  }
  std::stable_sort(out.begin(), out.end(), [](const CorpusEntry & a, const CorpusEntry & b) { return a.time < b.time; });
  return out;
}

std::vector<CorpusEntry> load_corpus_file(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open corpus " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

std::vector<CorpusOutcome> run_corpus(Session & session, const std::vector<CorpusEntry> & corpus, double duration)
{
  std::vector<CorpusOutcome> out;
  std::size_t next = 0;
  const double dt = session.config().dt;
  const auto steps = static_cast<long long>(std::llround(duration / dt));
  auto speak_due = [&]() {
    while (next < corpus.size() && corpus[next].time <= session.world().time + 1e-9) {
      CorpusOutcome o;
      o.entry = corpus[next++];
      try {
        o.result = session.handle_utterance(o.entry.utterance);
      } catch (const std::exception & e) {
        o.error = e.what();
      }
      out.push_back(std::move(o));
    }
  };
  for (long long i = 0; i < steps; ++i) {
    speak_due();
    session.step();
  }
  speak_due();
  return out;
}

std::vector<PreferenceProfile> default_preference_profiles()
{
  return {
    {"cautious", 33.0, 38.0, "Could you drive more conservatively?", 2.0},
    {"hurried", 52.0, 58.0, "I am really in a hurry now.", 2.0},
    {"moderate", 42.0, 47.0, "can you drive faster", 2.0},
  };
}

ScriptedDriver::ScriptedDriver(PreferenceProfile profile, std::uint64_t seed, ScriptedDriverParams params)
: profile_(std::move(profile)), params_(params)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-params_.jitter, params_.jitter);
  command_time_ = std::max(0.0, profile_.command_time + u(rng));
}

void ScriptedDriver::new_trip()
{
  commanded_ = false;
  took_over_ = false;
  out_since_.reset();
}

void ScriptedDriver::observe(Session & session)
{
  const double t = session.world().time;
  if (!commanded_ && t >= command_time_) {
    session.handle_utterance("command " + profile_.command);
    commanded_ = true;
  }
  if (!commanded_ || took_over_ || t < command_time_ + params_.settle) {
    return;
  }
  const double v = session.world().ego.speed * kKmhPerMps;
  if (v >= profile_.band_lo && v <= profile_.band_hi) {
    out_since_.reset();
    return;
  }
  if (!out_since_) {
    out_since_ = t;
  }
  if (t - *out_since_ > params_.patience) {
    session.record_takeover();
    took_over_ = true;
    session.handle_utterance(v > profile_.band_hi ? "evaluate that was too fast for me"
                                                  : "evaluate that was too slow for me");
  }
}

PreferenceRun run_preference_trips(
  const PreferenceProfile & profile, std::uint64_t seed, bool memory_enabled, int trips,
  const std::filesystem::path & data_dir, double trip_duration)
{
  auto memory = std::make_shared<MemoryStore>(data_dir);
  SessionConfig cfg;
  cfg.session_id = profile.name + "-" + std::to_string(seed);
  cfg.driver_id = profile.name;
  cfg.scenario = std::make_shared<const Scenario>(make_highway_scenario(seed));
  cfg.seed = seed;
  cfg.memory_enabled = memory_enabled;
  Session session(cfg, memory);
  ScriptedDriver driver(profile, seed);
  PreferenceRun run;
  const auto steps = static_cast<long long>(std::llround(trip_duration / cfg.dt));
  for (int trip = 0; trip < trips; ++trip) {
    driver.new_trip();
    for (long long i = 0; i < steps; ++i) {
      session.step();
      driver.observe(session);
    }
    run.applied.push_back(session.follower());
    const auto summary = session.end_trip();
    run.takeovers.push_back(summary.takeover ? 1 : 0);
  }
  return run;
}

}  // namespace lmpdrive
