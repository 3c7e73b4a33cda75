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

#ifndef LMPDRIVE__TRAJECTORY_LOG_HPP_
#define LMPDRIVE__TRAJECTORY_LOG_HPP_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lmpdrive/sim.hpp"

namespace lmpdrive
{

/// One line of a trajectory log:
///   t,x,y,heading,speed,accel,lead_gap,engaged[,closing_speed]
/// Optional fields are written empty. The trailing closing_speed column is
/// an extension; readers accept eight-column logs and derive it from lead_gap.
struct TrajectoryRecord
{
  double t{0.0};
  double x{0.0};
  double y{0.0};
  double heading{0.0};
  double speed{0.0};
  double accel{0.0};
  std::optional<double> lead_gap;
  bool engaged{false};
  std::optional<double> closing_speed;

  friend bool operator==(const TrajectoryRecord &, const TrajectoryRecord &) = default;
};

inline constexpr const char * kTrajectoryHeader = "# t,x,y,heading,speed,accel,lead_gap,engaged,closing_speed";

TrajectoryRecord record_from_world(const WorldState & world);

std::string format_record(const TrajectoryRecord & record);
/// Throws std::invalid_argument on a malformed line.
TrajectoryRecord parse_record(const std::string & line);

void write_trajectory(std::ostream & out, const std::vector<TrajectoryRecord> & records);
std::vector<TrajectoryRecord> read_trajectory(std::istream & in);
std::vector<TrajectoryRecord> read_trajectory_file(const std::string & path);

}  // namespace lmpdrive

#endif  // LMPDRIVE__TRAJECTORY_LOG_HPP_
