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

#ifndef LMPDRIVE__CONTEXT_HPP_
#define LMPDRIVE__CONTEXT_HPP_

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lmpdrive/sim.hpp"

namespace lmpdrive
{

/// Environment facts as the language model sees them. Speeds in km/h.
struct ContextSnapshot
{
  double ego_speed{0.0};
  std::optional<double> lead_speed;
  std::optional<double> lead_gap;
  double speed_limit{0.0};
  std::string weather;
  std::string road_type;
  std::string traffic_level;
  double timestamp{0.0};

  friend bool operator==(const ContextSnapshot &, const ContextSnapshot &) = default;
};

struct RoadInfo
{
  double speed_limit{0.0};  // km/h
  std::string road_type;
};

/// Position-keyed lookups. nullopt is the declared Unavailable answer.
class EnvironmentSource
{
public:
  virtual ~EnvironmentSource() = default;
  virtual std::string name() const = 0;
  virtual std::optional<std::string> weather(Vec2 position) = 0;
  virtual std::optional<RoadInfo> road(Vec2 position) = 0;
  virtual std::optional<std::string> traffic(Vec2 position) = 0;
};

/// Scenario constants.
class StaticSource : public EnvironmentSource
{
public:
  explicit StaticSource(const Scenario & scenario);
  std::string name() const override { return "static"; }
  std::optional<std::string> weather(Vec2) override { return weather_; }
  std::optional<RoadInfo> road(Vec2) override { return road_; }
  std::optional<std::string> traffic(Vec2) override { return traffic_; }

private:
  std::string weather_;
  RoadInfo road_;
  std::string traffic_;
};

/// Replayable fixture: JSON with optional top-level `weather`, `traffic_level`,
/// `speed_limit`, `road_type`, and `zones` of x/y boxes overriding any of them.
class FileSource : public EnvironmentSource
{
public:
  static std::unique_ptr<FileSource> from_file(const std::string & path);
  static std::unique_ptr<FileSource> from_json(const std::string & json_text);

  std::string name() const override { return "file"; }
  std::optional<std::string> weather(Vec2 position) override;
  std::optional<RoadInfo> road(Vec2 position) override;
  std::optional<std::string> traffic(Vec2 position) override;

  struct Zone
  {
    double x_min{-1e300};
    double x_max{1e300};
    double y_min{-1e300};
    double y_max{1e300};
    std::optional<std::string> weather;
    std::optional<double> speed_limit;
    std::optional<std::string> road_type;
    std::optional<std::string> traffic_level;

    bool contains(Vec2 p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
  };

private:
  std::vector<Zone> zones_;  ///< last matching zone wins; the top level is zone 0
};

/// Generic JSON-over-HTTP(S) weather lookup: GET {base_url}/weather?x=..&y=..
/// returning {"weather": "..."}; the key goes in an `X-Api-Key` header.
class HttpWeatherSource : public EnvironmentSource
{
public:
  HttpWeatherSource(std::string base_url, std::string api_key, std::chrono::milliseconds timeout);
  /// Reads LMPDRIVE_WEATHER_URL / LMPDRIVE_WEATHER_KEY; nullptr when no URL is set.
  static std::unique_ptr<HttpWeatherSource> from_environment(std::chrono::milliseconds timeout);

  std::string name() const override { return "http-weather"; }
  std::optional<std::string> weather(Vec2 position) override;
  std::optional<RoadInfo> road(Vec2) override { return std::nullopt; }
  std::optional<std::string> traffic(Vec2) override { return std::nullopt; }

private:
  std::string base_url_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

struct GatherOptions
{
  std::chrono::milliseconds budget{50};
};

/// Merges world-truth kinematics with source lookups. Sources are asked
/// concurrently; the first source (in order) with an answer wins, and fields
/// nobody answers in time fall back to the scenario.
ContextSnapshot gather(
  const WorldState & world, const std::vector<std::shared_ptr<EnvironmentSource>> & sources,
  const GatherOptions & options = {});

/// Fixed sentence templates, one per line, numbers with one decimal.
std::string render_context(const ContextSnapshot & snapshot);

/// Inverse of render_context for the numeric and token fields it prints.
std::optional<ContextSnapshot> parse_context(const std::string & text);

}  // namespace lmpdrive

#endif  // LMPDRIVE__CONTEXT_HPP_
