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

#include <fstream>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "lmpdrive/sim.hpp"
#include "lmpdrive/text.hpp"

namespace lmpdrive
{

namespace
{

constexpr std::string_view kFormatName = "lmpdrive-scenario";
constexpr int kFormatVersion = 1;

nlohmann::json track_to_json(const Polyline & track)
{
  nlohmann::json pts = nlohmann::json::array();
  for (const auto & p : track.points()) {
    pts.push_back({p.x, p.y});
  }
  return {{"closed", track.closed()}, {"points", pts}};
}

Polyline track_from_json(const nlohmann::json & j)
{
  std::vector<Vec2> pts;
  for (const auto & p : j.at("points")) {
    pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  }
  return Polyline(std::move(pts), j.value("closed", false));
}

nlohmann::json actor_to_json(const ActorState & actor)
{
  nlohmann::json profile = nlohmann::json::array();
  for (const auto & b : actor.speed_profile) {
    profile.push_back({b.time, b.speed});
  }
  return {{"lane", actor.lane_id}, {"s", actor.s}, {"speed_profile", profile}};
}

ActorState actor_from_json(const nlohmann::json & j)
{
  ActorState actor;
  actor.lane_id = j.at("lane").get<int>();
  actor.s = j.at("s").get<double>();
  for (const auto & b : j.value("speed_profile", nlohmann::json::array())) {
    actor.speed_profile.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
  }
  return actor;
}

}  // namespace

Scenario parse_scenario(const std::string & text)
{
  Scenario sc;
  sc.tracks.clear();
  bool saw_format = false;
  bool saw_version = false;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  try {
    while (std::getline(in, raw)) {
      ++line_no;
      const std::string line = trim(raw);
      if (line.empty() || line.front() == '#') {
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument("expected key = value");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "format") {
        if (value != kFormatName) {
          throw std::invalid_argument("unsupported format " + value);
        }
        saw_format = true;
      } else if (key == "version") {
        if (std::stoi(value) != kFormatVersion) {
          throw std::invalid_argument("unsupported version " + value);
        }
        saw_version = true;
      } else if (key == "kind") {
        sc.kind = scenario_kind_from_string(value);
      } else if (key == "speed_limit") {
        sc.speed_limit = std::stod(value);
      } else if (key == "weather") {
        sc.weather = value;
      } else if (key == "road_type") {
        sc.road_type = value;
      } else if (key == "traffic_level") {
        sc.traffic_level = value;
      } else if (key == "ego_lane") {
        sc.ego_lane = std::stoi(value);
      } else if (key == "ego_start_s") {
        sc.ego_start_s = std::stod(value);
      } else if (key == "initial_follower") {
        const auto j = nlohmann::json::parse(value);
        sc.initial_follower.target_velocity = j.at("velocity").get<double>();
        sc.initial_follower.lookahead_distance = j.at("lookahead_distance").get<double>();
        sc.initial_follower.lookahead_ratio = j.at("lookahead_ratio").get<double>();
        sc.initial_follower.param_flag = j.at("param_flag").get<int>();
      } else if (key == "track") {
        sc.tracks.push_back(track_from_json(nlohmann::json::parse(value)));
      } else if (key == "actor") {
        sc.actors.push_back(actor_from_json(nlohmann::json::parse(value)));
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    }
  } catch (const std::exception & e) {
    throw std::invalid_argument("scenario line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!saw_format || !saw_version) {
    throw std::invalid_argument("scenario document lacks format/version header");
  }
  sc.validate();
  return sc;
}

std::string serialize_scenario(const Scenario & sc)
{
  std::ostringstream out;
  out << "format = " << kFormatName << "\n";
  out << "version = " << kFormatVersion << "\n";
  out << "kind = " << to_string(sc.kind) << "\n";
  out << "speed_limit = " << format_double(sc.speed_limit) << "\n";
  out << "weather = " << sc.weather << "\n";
  out << "road_type = " << sc.road_type << "\n";
  out << "traffic_level = " << sc.traffic_level << "\n";
  out << "ego_lane = " << sc.ego_lane << "\n";
  out << "ego_start_s = " << format_double(sc.ego_start_s) << "\n";
  const nlohmann::json follower = {
    {"velocity", sc.initial_follower.target_velocity},
    {"lookahead_distance", sc.initial_follower.lookahead_distance},
    {"lookahead_ratio", sc.initial_follower.lookahead_ratio},
    {"param_flag", sc.initial_follower.param_flag}};
  out << "initial_follower = " << follower.dump() << "\n";
  for (const auto & track : sc.tracks) {
    out << "track = " << track_to_json(track).dump() << "\n";
  }
  for (const auto & actor : sc.actors) {
    out << "actor = " << actor_to_json(actor).dump() << "\n";
  }
  return out.str();
}

Scenario load_scenario_file(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open scenario file " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace lmpdrive
