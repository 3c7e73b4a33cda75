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

#ifndef LMPDRIVE__METRICS_HPP_
#define LMPDRIVE__METRICS_HPP_

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lmpdrive/trajectory_log.hpp"

namespace lmpdrive
{

class EmptyLog : public std::invalid_argument
{
public:
  explicit EmptyLog(const std::string & what) : std::invalid_argument(what) {}
};

struct MetricSample
{
  double t{0.0};
  double speed{0.0};  // m/s
  double accel{0.0};  // m/s^2
  std::optional<double> lead_gap;
  std::optional<double> closing_speed;  ///< positive when the gap shrinks
};

/// Uniformly sampled metric input.
class TrajectoryLog
{
public:
  TrajectoryLog() = default;
  /// Throws std::invalid_argument unless timestamps strictly increase with a constant step.
  explicit TrajectoryLog(std::vector<MetricSample> samples);

  static TrajectoryLog from_records(const std::vector<TrajectoryRecord> & records);

  const std::vector<MetricSample> & samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  double dt() const { return dt_; }

private:
  std::vector<MetricSample> samples_;
  double dt_{0.0};
};

/// nullopt means not applicable (no closing sample).
std::optional<double> min_ttc(const TrajectoryLog & log);
double speed_variance(const TrajectoryLog & log);
double mean_abs_accel(const TrajectoryLog & log);
/// Central finite difference of acceleration over interior samples.
double mean_abs_jerk(const TrajectoryLog & log);

/// Incremental min-TTC and Welford speed variance.
class StreamingMetrics
{
public:
  void push(const MetricSample & sample);
  std::optional<double> min_ttc() const { return min_ttc_; }
  double speed_variance() const;
  std::size_t count() const { return count_; }

private:
  std::optional<double> min_ttc_;
  std::size_t count_{0};
  double mean_{0.0};
  double m2_{0.0};
};

struct Baseline
{
  double speed_variance{1.0};   // m^2/s^2
  double mean_abs_accel{1.0};   // m/s^2
  double mean_abs_jerk{1.0};    // m/s^3
};

struct ScoreConfig
{
  double w_ttc{0.3};
  double w_variance{0.7 / 3.0};
  double w_accel{0.7 / 3.0};
  double w_jerk{0.7 / 3.0};
  double gamma{20.0};
  double ttc_threshold{1.5};
  Baseline baseline;

  /// Throws std::invalid_argument when weights are negative or do not sum to 1 +- 1e-9,
  /// or when gamma, the threshold or a baseline is not positive.
  void validate() const;
};

/// Loads weights, gamma, threshold and a named baseline set from JSON text.
ScoreConfig parse_score_config(const std::string & json_text, const std::string & behavior = "");

double sub_score_ttc(std::optional<double> ttc_min, double ttc_threshold);
double sub_score_ratio(double value, double baseline, double gamma);

struct SubScores
{
  double ttc{100.0};
  double variance{100.0};
  double accel{100.0};
  double jerk{100.0};
};

struct LatencyStats
{
  double mean{0.0};
  double p95{0.0};
  std::size_t count{0};
};

/// Mean and nearest-rank 95th percentile. Throws EmptyLog on no samples.
LatencyStats latency_stats(const std::vector<double> & samples);

/// N_takeover / N_operation. Throws std::invalid_argument when n_operation is 0
/// or n_takeover exceeds it.
double takeover_rate(std::uint64_t n_takeover, std::uint64_t n_operation);

struct TakeoverStats
{
  std::uint64_t n_takeover{0};
  std::uint64_t n_operation{0};
  std::optional<double> rate;
};

struct MetricsReport
{
  std::optional<double> ttc_min;
  double speed_variance{0.0};
  double mean_abs_accel{0.0};
  double mean_abs_jerk{0.0};
  SubScores sub_scores;
  double driving_score{0.0};
  std::vector<double> latency_samples;
  std::optional<LatencyStats> latency;
  TakeoverStats takeover;
};

/// Weighted sum of the four sub-scores; non-applicable TTC scores 100.
double driving_score(const MetricsReport & report, const ScoreConfig & cfg);

/// Fills every metric, sub-score and the driving score from raw metric values.
MetricsReport score_metrics(
  std::optional<double> ttc_min, double variance, double accel, double jerk, const ScoreConfig & cfg);

MetricsReport compute_report(const TrajectoryLog & log, const ScoreConfig & cfg);

}  // namespace lmpdrive

#endif  // LMPDRIVE__METRICS_HPP_
