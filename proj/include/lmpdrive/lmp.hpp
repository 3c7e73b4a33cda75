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

#ifndef LMPDRIVE__LMP_HPP_
#define LMPDRIVE__LMP_HPP_

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lmpdrive/sim.hpp"

namespace lmpdrive
{

/// The single grammar definition shared by the parser and the prompt's
/// output-format section.
namespace lmp_grammar
{

inline constexpr std::string_view kEngageTopic = "/vehicle/engage";
inline constexpr std::string_view kEngageType = "std_msgs/Bool";
inline constexpr std::string_view kFollowerTopic = "/autoware_config_msgs/ConfigWaypointFollower";
inline constexpr std::string_view kFollowerType = "autoware_config_msgs/ConfigWaypointFollower";

enum class FieldKind { kInteger, kNumber };

struct FieldSpec
{
  std::string_view name;
  FieldKind kind;
  std::string_view meaning;
};

inline constexpr std::array<FieldSpec, 4> kFollowerFields{{
  {"param_flag", FieldKind::kInteger, "1 applies all values, 0 changes the velocity and keeps the current lookahead"},
  {"velocity", FieldKind::kNumber, "target velocity in km/h"},
  {"lookahead_distance", FieldKind::kNumber, "minimum pure-pursuit lookahead distance in meters"},
  {"lookahead_ratio", FieldKind::kNumber, "lookahead distance per m/s of speed"},
}};

}  // namespace lmp_grammar

/// A parsed Language Model Program.
struct Lmp
{
  std::optional<bool> engage;
  std::optional<double> engage_timeout;  // seconds, from a `timeout Ns` prefix
  std::optional<FollowerConfig> follower;
  std::vector<std::string> source_lines;
  std::vector<std::string> warnings;
};

/// Compares the executable content only (engage flag and follower config).
bool same_program(const Lmp & a, const Lmp & b);

struct FormatError
{
  std::string message;
  std::size_t line{0};  ///< 1-based, 0 when not tied to a line
  std::vector<std::string> missing_keys;
  std::vector<std::string> unexpected_keys;
};

using ParseResult = std::variant<Lmp, FormatError>;

/// Total over arbitrary input; never throws for malformed text.
ParseResult parse_lmp(std::string_view text);

/// Canonical text form; parse_lmp(serialize_lmp(p)) yields the same program.
std::string serialize_lmp(const Lmp & lmp);

struct Range
{
  double lo{0.0};
  double hi{0.0};

  /// False for NaN.
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct SafetyLimits
{
  double speed_limit{60.0};  // km/h
  Range lookahead_distance{4.0, 30.0};
  Range lookahead_ratio{1.0, 4.0};
  std::vector<int> param_flags{0, 1};

  Range velocity() const { return {0.0, speed_limit}; }
  /// Throws std::invalid_argument when a range is empty or the limit is not positive.
  void validate() const;
};

SafetyLimits limits_for_speed_limit(double speed_limit_kmh);

enum class Outcome { kAccepted, kFormatRejected, kParameterRejected };

std::string to_string(Outcome outcome);

struct Violation
{
  std::string field;
  double value{0.0};
  std::string bound;  ///< e.g. "<= 60.0"

  friend bool operator==(const Violation &, const Violation &) = default;
};

struct Verdict
{
  Outcome outcome{Outcome::kFormatRejected};
  std::vector<Violation> violations;
  std::string detail;

  bool accepted() const { return outcome == Outcome::kAccepted; }
};

/// Parameter verification; Accepted iff every present field is inside its range.
Verdict verify(const Lmp & lmp, const SafetyLimits & limits);

Verdict format_rejection(const FormatError & error);

/// Parse and verify in one pass.
struct GateResult
{
  std::optional<Lmp> lmp;
  Verdict verdict;
};

GateResult gate(std::string_view text, const SafetyLimits & limits);

/// Output-format section for the system message, built from lmp_grammar.
std::string output_format_contract(const SafetyLimits & limits);

}  // namespace lmpdrive

#endif  // LMPDRIVE__LMP_HPP_
