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

#include "lmpdrive/context.hpp"

#include <cstdlib>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "lmpdrive/text.hpp"

namespace lmpdrive
{

StaticSource::StaticSource(const Scenario & scenario)
: weather_(scenario.weather),
  road_{scenario.speed_limit, scenario.road_type},
  traffic_(scenario.traffic_level)
{
}

namespace
{

template <typename T>
std::optional<T> opt_field(const nlohmann::json & j, const char * key)
{
  if (j.contains(key) && !j.at(key).is_null()) {
    return j.at(key).get<T>();
  }
  return std::nullopt;
}

FileSource::Zone zone_from_json(const nlohmann::json & j)
{
  FileSource::Zone z;
  z.x_min = j.value("x_min", z.x_min);
  z.x_max = j.value("x_max", z.x_max);
  z.y_min = j.value("y_min", z.y_min);
  z.y_max = j.value("y_max", z.y_max);
  z.weather = opt_field<std::string>(j, "weather");
  z.speed_limit = opt_field<double>(j, "speed_limit");
  z.road_type = opt_field<std::string>(j, "road_type");
  z.traffic_level = opt_field<std::string>(j, "traffic_level");
  return z;
}

}  // namespace

std::unique_ptr<FileSource> FileSource::from_json(const std::string & json_text)
{
  const auto j = nlohmann::json::parse(json_text);
  auto src = std::unique_ptr<FileSource>(new FileSource());
  src->zones_.push_back(zone_from_json(j));
  for (const auto & z : j.value("zones", nlohmann::json::array())) {
    src->zones_.push_back(zone_from_json(z));
  }
  return src;
}

std::unique_ptr<FileSource> FileSource::from_file(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open context fixture " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::optional<std::string> FileSource::weather(Vec2 p)
{
  std::optional<std::string> out;
  for (const auto & z : zones_) {
    if (z.contains(p) && z.weather) {
      out = z.weather;
    }
  }
  return out;
}

std::optional<RoadInfo> FileSource::road(Vec2 p)
{
  std::optional<double> limit;
  std::optional<std::string> type;
  for (const auto & z : zones_) {
    if (!z.contains(p)) {
      continue;
    }
    if (z.speed_limit) {
      limit = z.speed_limit;
    }
    if (z.road_type) {
      type = z.road_type;
    }
  }
  if (!limit || !type) {
    return std::nullopt;
  }
  return RoadInfo{*limit, *type};
}

std::optional<std::string> FileSource::traffic(Vec2 p)
{
  std::optional<std::string> out;
  for (const auto & z : zones_) {
    if (z.contains(p) && z.traffic_level) {
      out = z.traffic_level;
    }
  }
  return out;
}

HttpWeatherSource::HttpWeatherSource(std::string base_url, std::string api_key, std::chrono::milliseconds timeout)
: base_url_(std::move(base_url)), api_key_(std::move(api_key)), timeout_(timeout)
{
}

std::unique_ptr<HttpWeatherSource> HttpWeatherSource::from_environment(std::chrono::milliseconds timeout)
{
  const char * url = std::getenv("LMPDRIVE_WEATHER_URL");
  if (url == nullptr || *url == '\0') {
    return nullptr;
  }
  const char * key = std::getenv("LMPDRIVE_WEATHER_KEY");
  return std::make_unique<HttpWeatherSource>(url, key ? key : "", timeout);
}

std::optional<std::string> HttpWeatherSource::weather(Vec2 p)
{
  try {
    httplib::Client client(base_url_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!api_key_.empty()) {
      headers.emplace("X-Api-Key", api_key_);
    }
    const std::string path = "/weather?x=" + format_double(p.x) + "&y=" + format_double(p.y);
    auto res = client.Get(path, headers);
    if (!res || res->status != 200) {
      return std::nullopt;
    }
    const auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("weather") || !j.at("weather").is_string()) {
      return std::nullopt;
    }
    return j.at("weather").get<std::string>();
  } catch (const std::exception &) {
    return std::nullopt;
  }
}

namespace
{

struct SourceAnswer
{
  std::optional<std::string> weather;
  std::optional<RoadInfo> road;
  std::optional<std::string> traffic;
};

}  // namespace

ContextSnapshot gather(
  const WorldState & world, const std::vector<std::shared_ptr<EnvironmentSource>> & sources,
  const GatherOptions & options)
{
  const Scenario & sc = *world.scenario;
  ContextSnapshot snap;
  snap.timestamp = world.time;
  snap.ego_speed = world.ego.speed * kKmhPerMps;
  if (const auto lead = find_lead(world)) {
    snap.lead_speed = lead->speed * kKmhPerMps;
    snap.lead_gap = lead->gap;
  }
  snap.speed_limit = sc.speed_limit;
  snap.weather = sc.weather;
  snap.road_type = sc.road_type;
  snap.traffic_level = sc.traffic_level;

  // Each query runs detached so a stalled source cannot hold the caller past the budget.
  const Vec2 where = world.ego.position;
  std::vector<std::future<SourceAnswer>> pending;
  pending.reserve(sources.size());
  for (const auto & source : sources) {
    auto promise = std::make_shared<std::promise<SourceAnswer>>();
    pending.push_back(promise->get_future());
    std::thread([source, promise, where]() {
      SourceAnswer a;
      try {
        a.weather = source->weather(where);
        a.road = source->road(where);
        a.traffic = source->traffic(where);
      } catch (...) {
        a = SourceAnswer{};
      }
      promise->set_value(std::move(a));
    }).detach();
  }
  const auto deadline = std::chrono::steady_clock::now() + options.budget;
  std::vector<SourceAnswer> answers;
  for (auto & f : pending) {
    if (f.wait_until(deadline) == std::future_status::ready) {
      answers.push_back(f.get());
    } else {
      answers.emplace_back();
    }
  }
  for (auto it = answers.rbegin(); it != answers.rend(); ++it) {
    if (it->weather) {
      snap.weather = *it->weather;
    }
    if (it->road) {
      snap.speed_limit = it->road->speed_limit;
      snap.road_type = it->road->road_type;
    }
    if (it->traffic) {
      snap.traffic_level = *it->traffic;
    }
  }
  return snap;
}

namespace
{

constexpr std::string_view kLeadPrefix = "A vehicle in front of you is running at ";
constexpr std::string_view kEgoPrefix = "Your current speed is ";
constexpr std::string_view kLimitPrefix = "The speed limit is ";
constexpr std::string_view kSpeedSuffix = " km/h.";
constexpr std::string_view kWeatherPrefix = "The weather is ";
constexpr std::string_view kRoadPrefix = "You are driving on a ";
constexpr std::string_view kTrafficPrefix = "Traffic is ";

std::optional<std::string> strip(std::string_view line, std::string_view prefix, std::string_view suffix)
{
  if (line.size() < prefix.size() + suffix.size() || line.substr(0, prefix.size()) != prefix ||
      line.substr(line.size() - suffix.size()) != suffix) {
    return std::nullopt;
  }
  return std::string(line.substr(prefix.size(), line.size() - prefix.size() - suffix.size()));
}

}  // namespace

std::string render_context(const ContextSnapshot & s)
{
  std::string out;
  auto line = [&out](std::string_view a, const std::string & value, std::string_view b) {
    if (!out.empty()) {
      out += "\n";
    }
    out += a;
    out += value;
    out += b;
  };
  if (s.lead_speed) {
    line(kLeadPrefix, format_fixed1(*s.lead_speed), kSpeedSuffix);
  }
  line(kEgoPrefix, format_fixed1(s.ego_speed), kSpeedSuffix);
  line(kLimitPrefix, format_fixed1(s.speed_limit), kSpeedSuffix);
  if (!s.weather.empty()) {
    line(kWeatherPrefix, s.weather, ".");
  }
  if (!s.road_type.empty()) {
    line(kRoadPrefix, s.road_type, ".");
  }
  if (!s.traffic_level.empty()) {
    line(kTrafficPrefix, s.traffic_level, ".");
  }
  return out;
}

std::optional<ContextSnapshot> parse_context(const std::string & text)
{
  ContextSnapshot s;
  bool ego = false;
  bool limit = false;
  for (const auto & raw : split_lines(text)) {
    const std::string l = trim(raw);
    if (l.empty()) {
      continue;
    }
    if (auto v = strip(l, kLeadPrefix, kSpeedSuffix)) {
      s.lead_speed = parse_double(*v);
      if (!s.lead_speed) {
        return std::nullopt;
      }
    } else if (auto v = strip(l, kEgoPrefix, kSpeedSuffix)) {
      const auto d = parse_double(*v);
      if (!d) {
        return std::nullopt;
      }
      s.ego_speed = *d;
      ego = true;
    } else if (auto v = strip(l, kLimitPrefix, kSpeedSuffix)) {
      const auto d = parse_double(*v);
      if (!d) {
        return std::nullopt;
      }
      s.speed_limit = *d;
      limit = true;
    } else if (auto v = strip(l, kWeatherPrefix, ".")) {
      s.weather = *v;
    } else if (auto v = strip(l, kRoadPrefix, ".")) {
      s.road_type = *v;
    } else if (auto v = strip(l, kTrafficPrefix, ".")) {
      s.traffic_level = *v;
    } else {
      return std::nullopt;
    }
  }
  if (!ego || !limit) {
    return std::nullopt;
  }
  return s;
}

}  // namespace lmpdrive
