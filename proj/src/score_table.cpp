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

#include "lmpdrive/score_table.hpp"

#include <sstream>

#include "lmpdrive/text.hpp"

namespace lmpdrive
{

namespace
{

std::vector<std::string> split_commas(const std::string & line)
{
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) {
    out.push_back(trim(cur));
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

std::optional<double> optional_number(const std::string & field, const std::string & where)
{
  if (field.empty()) {
    return std::nullopt;
  }
  const auto v = parse_double(field);
  if (!v) {
    throw std::invalid_argument(where + "not a number: '" + field + "'");
  }
  return v;
}

}  // namespace

std::vector<MetricRow> parse_metric_table(const std::string & text)
{
  std::vector<MetricRow> rows;
  const auto lines = split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string line = trim(lines[n]);
    if (line.empty() || line.front() == '#' || line.rfind("behavior", 0) == 0) {
      continue;
    }
    const std::string where = "metric table line " + std::to_string(n + 1) + ": ";
    const auto f = split_commas(line);
    if (f.size() != 8) {
      throw std::invalid_argument(where + "expected 8 fields, got " + std::to_string(f.size()));
    }
    MetricRow r;
    r.behavior = f[0];
    r.row = f[1];
    r.ttc = optional_number(f[2], where);
    const auto var = optional_number(f[3], where);
    const auto acc = optional_number(f[4], where);
    const auto jerk = optional_number(f[5], where);
    if (!var || !acc || !jerk) {
      throw std::invalid_argument(where + "variance, acceleration and jerk are required");
    }
    r.speed_variance = *var;
    r.mean_abs_accel = *acc;
    r.mean_abs_jerk = *jerk;
    r.latency = optional_number(f[6], where);
    r.printed_score = optional_number(f[7], where);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ScoredRow> score_table(const std::vector<MetricRow> & rows, const std::string & config_json)
{
  std::vector<ScoredRow> out;
  for (const auto & r : rows) {
    const ScoreConfig cfg = parse_score_config(config_json, r.behavior);
    out.push_back({r, score_metrics(r.ttc, r.speed_variance, r.mean_abs_accel, r.mean_abs_jerk, cfg)});
  }
  return out;
}

}  // namespace lmpdrive
