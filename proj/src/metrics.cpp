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

#include "lmpdrive/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace lmpdrive
{

namespace
{
constexpr double kDtTolerance = 1e-6;
}

TrajectoryLog::TrajectoryLog(std::vector<MetricSample> samples) : samples_(std::move(samples))
{
  if (samples_.size() >= 2) {
    dt_ = samples_[1].t - samples_[0].t;
    if (!(dt_ > 0.0)) {
      throw std::invalid_argument("log timestamps must strictly increase");
    }
    for (std::size_t i = 1; i < samples_.size(); ++i) {
      const double d = samples_[i].t - samples_[i - 1].t;
      if (!(d > 0.0) || std::abs(d - dt_) > kDtTolerance * std::max(1.0, dt_)) {
        throw std::invalid_argument("log must be uniformly sampled (sample " + std::to_string(i) + ")");
      }
    }
    dt_ = (samples_.back().t - samples_.front().t) / static_cast<double>(samples_.size() - 1);
  }
}

TrajectoryLog TrajectoryLog::from_records(const std::vector<TrajectoryRecord> & records)
{
  std::vector<MetricSample> samples;
  samples.reserve(records.size());
  for (const auto & r : records) {
    samples.push_back({r.t, r.speed, r.accel, r.lead_gap, r.closing_speed});
  }
  return TrajectoryLog(std::move(samples));
}

namespace
{

std::optional<double> sample_ttc(const MetricSample & s)
{
  if (s.lead_gap && s.closing_speed && *s.closing_speed > 0.0) {
    return *s.lead_gap / *s.closing_speed;
  }
  return std::nullopt;
}

void require_nonempty(const TrajectoryLog & log, const char * what)
{
  if (log.empty()) {
    throw EmptyLog(std::string(what) + " needs a nonempty log");
  }
}

}  // namespace

std::optional<double> min_ttc(const TrajectoryLog & log)
{
  std::optional<double> best;
  for (const auto & s : log.samples()) {
    if (const auto ttc = sample_ttc(s); ttc && (!best || *ttc < *best)) {
      best = ttc;
    }
  }
  return best;
}

double speed_variance(const TrajectoryLog & log)
{
  require_nonempty(log, "speed variance");
  const auto & s = log.samples();
  double mean = 0.0;
  for (const auto & x : s) {
    mean += x.speed;
  }
  mean /= static_cast<double>(s.size());
  double acc = 0.0;
  for (const auto & x : s) {
    acc += (x.speed - mean) * (x.speed - mean);
  }
  return acc / static_cast<double>(s.size());
}

double mean_abs_accel(const TrajectoryLog & log)
{
  require_nonempty(log, "mean absolute acceleration");
  double acc = 0.0;
  for (const auto & x : log.samples()) {
    acc += std::abs(x.accel);
  }
  return acc / static_cast<double>(log.size());
}

double mean_abs_jerk(const TrajectoryLog & log)
{
  if (log.size() < 3) {
    throw EmptyLog("mean absolute jerk needs at least three samples");
  }
  const auto & s = log.samples();
  const double two_dt = 2.0 * log.dt();
  double acc = 0.0;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    acc += std::abs(s[i + 1].accel - s[i - 1].accel) / two_dt;
  }
  return acc / static_cast<double>(s.size() - 2);
}

void StreamingMetrics::push(const MetricSample & sample)
{
  if (const auto ttc = sample_ttc(sample); ttc && (!min_ttc_ || *ttc < *min_ttc_)) {
    min_ttc_ = ttc;
  }
  ++count_;
  const double delta = sample.speed - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (sample.speed - mean_);
}

double StreamingMetrics::speed_variance() const
{
  if (count_ == 0) {
    throw EmptyLog("speed variance needs a nonempty log");
  }
  return m2_ / static_cast<double>(count_);
}

void ScoreConfig::validate() const
{
  for (double w : {w_ttc, w_variance, w_accel, w_jerk}) {
    if (!(w >= 0.0)) {
      throw std::invalid_argument("score weights must be >= 0");
    }
  }
  const double sum = w_ttc + w_variance + w_accel + w_jerk;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("score weights must sum to 1");
  }
  if (!(gamma > 0.0) || !(ttc_threshold > 0.0)) {
    throw std::invalid_argument("gamma and ttc threshold must be positive");
  }
  if (!(baseline.speed_variance > 0.0) || !(baseline.mean_abs_accel > 0.0) || !(baseline.mean_abs_jerk > 0.0)) {
    throw std::invalid_argument("baselines must be positive");
  }
}

ScoreConfig parse_score_config(const std::string & json_text, const std::string & behavior)
{
  const auto j = nlohmann::json::parse(json_text);
  ScoreConfig cfg;
  if (j.contains("weights")) {
    const auto & w = j.at("weights");
    cfg.w_ttc = w.at("ttc").get<double>();
    cfg.w_variance = w.at("speed_variance").get<double>();
    cfg.w_accel = w.at("mean_abs_accel").get<double>();
    cfg.w_jerk = w.at("mean_abs_jerk").get<double>();
  }
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.ttc_threshold = j.value("ttc_threshold", cfg.ttc_threshold);
  const nlohmann::json * base = nullptr;
  if (j.contains("baselines")) {
    const auto & all = j.at("baselines");
    const std::string key = behavior.empty() ? j.value("default_behavior", std::string()) : behavior;
    if (!all.contains(key)) {
      throw std::invalid_argument("score config has no baseline for behavior '" + key + "'");
    }
    base = &all.at(key);
  } else if (j.contains("baseline")) {
    base = &j.at("baseline");
  }
  if (base) {
    cfg.baseline.speed_variance = base->at("speed_variance").get<double>();
    cfg.baseline.mean_abs_accel = base->at("mean_abs_accel").get<double>();
    cfg.baseline.mean_abs_jerk = base->at("mean_abs_jerk").get<double>();
  }
  cfg.validate();
  return cfg;
}

double sub_score_ttc(std::optional<double> ttc_min, double ttc_threshold)
{
  if (!ttc_min) {
    return 100.0;
  }
  return *ttc_min >= ttc_threshold ? 100.0 : 0.0;
}

double sub_score_ratio(double value, double baseline, double gamma)
{
  if (!(baseline > 0.0)) {
    throw std::invalid_argument("baseline must be positive");
  }
  return std::clamp(100.0 - gamma * value / baseline, 0.0, 100.0);
}

LatencyStats latency_stats(const std::vector<double> & samples)
{
  if (samples.empty()) {
    throw EmptyLog("latency statistics need at least one sample");
  }
  LatencyStats stats;
  stats.count = samples.size();
  stats.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(sorted.size())));
  stats.p95 = sorted[std::max<std::size_t>(rank, 1) - 1];
  return stats;
}

double takeover_rate(std::uint64_t n_takeover, std::uint64_t n_operation)
{
  if (n_operation == 0) {
    throw std::invalid_argument("takeover rate undefined with zero operations");
  }
  if (n_takeover > n_operation) {
    throw std::invalid_argument("more takeovers than operations");
  }
  return static_cast<double>(n_takeover) / static_cast<double>(n_operation);
}

double driving_score(const MetricsReport & report, const ScoreConfig & cfg)
{
  const auto & s = report.sub_scores;
  return cfg.w_ttc * s.ttc + cfg.w_variance * s.variance + cfg.w_accel * s.accel + cfg.w_jerk * s.jerk;
}

MetricsReport score_metrics(
  std::optional<double> ttc_min, double variance, double accel, double jerk, const ScoreConfig & cfg)
{
  cfg.validate();
  MetricsReport report;
  report.ttc_min = ttc_min;
  report.speed_variance = variance;
  report.mean_abs_accel = accel;
  report.mean_abs_jerk = jerk;
  report.sub_scores.ttc = sub_score_ttc(ttc_min, cfg.ttc_threshold);
  report.sub_scores.variance = sub_score_ratio(variance, cfg.baseline.speed_variance, cfg.gamma);
  report.sub_scores.accel = sub_score_ratio(accel, cfg.baseline.mean_abs_accel, cfg.gamma);
  report.sub_scores.jerk = sub_score_ratio(jerk, cfg.baseline.mean_abs_jerk, cfg.gamma);
  report.driving_score = driving_score(report, cfg);
  return report;
}

MetricsReport compute_report(const TrajectoryLog & log, const ScoreConfig & cfg)
{
  return score_metrics(min_ttc(log), speed_variance(log), mean_abs_accel(log), mean_abs_jerk(log), cfg);
}

}  // namespace lmpdrive
