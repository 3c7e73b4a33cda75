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

#include "lmpdrive/trajectory_log.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "lmpdrive/text.hpp"

namespace lmpdrive
{

TrajectoryRecord record_from_world(const WorldState & world)
{
  TrajectoryRecord r;
  r.t = world.time;
  r.x = world.ego.position.x;
  r.y = world.ego.position.y;
  r.heading = world.ego.heading;
  r.speed = world.ego.speed;
  r.accel = world.ego.acceleration;
  r.engaged = world.engaged;
  if (const auto lead = find_lead(world)) {
    r.lead_gap = lead->gap;
    r.closing_speed = world.ego.speed - lead->speed;
  }
  return r;
}

namespace
{

std::string opt(const std::optional<double> & v) { return v ? format_double(*v) : std::string(); }

double required(const std::string & field, const char * name)
{
  const auto v = parse_double(field);
  if (!v) {
    throw std::invalid_argument(std::string("bad numeric field ") + name + ": '" + field + "'");
  }
  return *v;
}

std::optional<double> optional_field(const std::string & field, const char * name)
{
  if (trim(field).empty()) {
    return std::nullopt;
  }
  return required(field, name);
}

}  // namespace

std::string format_record(const TrajectoryRecord & r)
{
  std::string out;
  out += format_double(r.t) + ",";
  out += format_double(r.x) + ",";
  out += format_double(r.y) + ",";
  out += format_double(r.heading) + ",";
  out += format_double(r.speed) + ",";
  out += format_double(r.accel) + ",";
  out += opt(r.lead_gap) + ",";
  out += r.engaged ? "1," : "0,";
  out += opt(r.closing_speed);
  return out;
}

TrajectoryRecord parse_record(const std::string & line)
{
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    fields.emplace_back();
  }
  if (fields.size() != 8 && fields.size() != 9) {
    throw std::invalid_argument("trajectory record needs 8 or 9 fields, got " + std::to_string(fields.size()));
  }
  TrajectoryRecord r;
  r.t = required(fields[0], "t");
  r.x = required(fields[1], "x");
  r.y = required(fields[2], "y");
  r.heading = required(fields[3], "heading");
  r.speed = required(fields[4], "speed");
  r.accel = required(fields[5], "accel");
  r.lead_gap = optional_field(fields[6], "lead_gap");
  const std::string engaged = trim(fields[7]);
  if (engaged == "1" || engaged == "true") {
    r.engaged = true;
  } else if (engaged == "0" || engaged == "false") {
    r.engaged = false;
  } else {
    throw std::invalid_argument("bad engaged field: '" + engaged + "'");
  }
  if (fields.size() == 9) {
    r.closing_speed = optional_field(fields[8], "closing_speed");
  }
  return r;
}

void write_trajectory(std::ostream & out, const std::vector<TrajectoryRecord> & records)
{
  out << kTrajectoryHeader << "\n";
  for (const auto & r : records) {
    out << format_record(r) << "\n";
  }
}

std::vector<TrajectoryRecord> read_trajectory(std::istream & in)
{
  std::vector<TrajectoryRecord> records;
  std::string line;
  bool any_closing_column = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') {
      continue;
    }
    records.push_back(parse_record(t));
    any_closing_column = any_closing_column || records.back().closing_speed.has_value();
  }
  if (!any_closing_column) {
    // Eight-column logs: closing speed from the backward difference of the gap.
    for (std::size_t i = 1; i < records.size(); ++i) {
      auto & cur = records[i];
      const auto & prev = records[i - 1];
      if (cur.lead_gap && prev.lead_gap && cur.t > prev.t) {
        cur.closing_speed = (*prev.lead_gap - *cur.lead_gap) / (cur.t - prev.t);
      }
    }
  }
  return records;
}

std::vector<TrajectoryRecord> read_trajectory_file(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open trajectory log " + path);
  }
  return read_trajectory(in);
}

}  // namespace lmpdrive
