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

#ifndef LMPDRIVE__SCRIPTED_DRIVER_HPP_
#define LMPDRIVE__SCRIPTED_DRIVER_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lmpdrive/session.hpp"

namespace lmpdrive
{

/// One line of a command corpus: `time_s,level,utterance`.
struct CorpusEntry
{
  double time{0.0};   // sim s
  std::string level;  ///< I, II, III, or - for non-command lines
  std::string utterance;

  friend bool operator==(const CorpusEntry &, const CorpusEntry &) = default;
};

/// Splits on the first two commas; blank and `#` lines are skipped. Entries
/// come back sorted by time (stable). Throws std::invalid_argument with the
/// line number on a malformed line.
std::vector<CorpusEntry> parse_corpus(const std::string & text);
std::vector<CorpusEntry> load_corpus_file(const std::filesystem::path & path);

struct CorpusOutcome
{
  CorpusEntry entry;
  std::optional<UtteranceResult> result;
  std::optional<std::string> error;
};

/// Steps `session` for `duration` seconds, speaking each entry once its time
/// has come. Errors from individual utterances are collected, not thrown.
std::vector<CorpusOutcome> run_corpus(Session & session, const std::vector<CorpusEntry> & corpus, double duration);

/// A driver who is happy while speed stays in [band_lo, band_hi] km/h.
struct PreferenceProfile
{
  std::string name;
  double band_lo{0.0};
  double band_hi{0.0};
  std::string command;        ///< spoken after the "command" trigger
  double command_time{2.0};   // sim s
};

std::vector<PreferenceProfile> default_preference_profiles();

struct ScriptedDriverParams
{
  double settle{8.0};    ///< s after the command before the band is judged
  double patience{3.0};  ///< s out of band before taking over
  double jitter{0.5};    ///< seeded spread of the command time, s
};

/// Issues its command, then takes over (at most once per trip) and gives
/// "too fast"/"too slow" feedback when the speed stays out of band too long.
class ScriptedDriver
{
public:
  ScriptedDriver(PreferenceProfile profile, std::uint64_t seed, ScriptedDriverParams params = {});

  /// Call after every session step.
  void observe(Session & session);
  /// Clears per-trip state; the next trip reuses the same command time.
  void new_trip();

  bool took_over() const { return took_over_; }
  double command_time() const { return command_time_; }

private:
  PreferenceProfile profile_;
  ScriptedDriverParams params_;
  double command_time_{0.0};
  bool commanded_{false};
  bool took_over_{false};
  std::optional<double> out_since_;
};

struct PreferenceRun
{
  std::vector<std::uint64_t> takeovers;  ///< per trip, 0 or 1
  std::vector<FollowerConfig> applied;   ///< follower config at each trip end
};

/// Highway, mock backend, virtual clock: `trips` trips of `trip_duration` s
/// for one driver whose memory lives under `data_dir`.
PreferenceRun run_preference_trips(
  const PreferenceProfile & profile, std::uint64_t seed, bool memory_enabled, int trips,
  const std::filesystem::path & data_dir, double trip_duration = 20.0);

}  // namespace lmpdrive

#endif  // LMPDRIVE__SCRIPTED_DRIVER_HPP_
