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

#ifndef LMPDRIVE__SCORE_TABLE_HPP_
#define LMPDRIVE__SCORE_TABLE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "lmpdrive/metrics.hpp"

namespace lmpdrive
{

/// One row of a metric table CSV:
///   behavior,row,ttc,speed_variance,mean_abs_accel,mean_abs_jerk,latency,score
/// Empty ttc means not applicable; latency and score may be empty.
struct MetricRow
{
  std::string behavior;
  std::string row;
  std::optional<double> ttc;
  double speed_variance{0.0};
  double mean_abs_accel{0.0};
  double mean_abs_jerk{0.0};
  std::optional<double> latency;
  std::optional<double> printed_score;
};

/// Skips blank and `#` lines and a header starting with "behavior".
/// Throws std::invalid_argument with the line number on a malformed line.
std::vector<MetricRow> parse_metric_table(const std::string & text);

struct ScoredRow
{
  MetricRow row;
  MetricsReport report;
};

/// Scores every row against the baselines `config_json` names for its behavior.
std::vector<ScoredRow> score_table(const std::vector<MetricRow> & rows, const std::string & config_json);

}  // namespace lmpdrive

#endif  // LMPDRIVE__SCORE_TABLE_HPP_
