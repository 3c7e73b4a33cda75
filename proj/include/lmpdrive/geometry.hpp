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

#ifndef LMPDRIVE__GEOMETRY_HPP_
#define LMPDRIVE__GEOMETRY_HPP_

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace lmpdrive
{

struct Vec2
{
  double x{0.0};
  double y{0.0};

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double k) { return {a.x * k, a.y * k}; }
  friend Vec2 operator*(double k, Vec2 a) { return {a.x * k, a.y * k}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;

  double norm() const { return std::hypot(x, y); }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

/// Closest point on a polyline.
struct Projection
{
  double s{0.0};          ///< arc length of the foot point
  double lateral{0.0};    ///< signed offset, positive to the left of travel
  std::size_t segment{0};
  Vec2 point;
};

/// Piecewise-linear waypoint track parameterized by arc length. A closed
/// polyline implicitly joins its last waypoint back to the first.
class Polyline
{
public:
  Polyline() = default;
  /// Throws std::invalid_argument on fewer than two waypoints or a zero-length segment.
  explicit Polyline(std::vector<Vec2> points, bool closed = false);

  const std::vector<Vec2> & points() const { return points_; }
  bool closed() const { return closed_; }
  bool empty() const { return points_.empty(); }
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  std::size_t segment_count() const { return cumulative_.empty() ? 0 : cumulative_.size() - 1; }

  /// Arc length is clamped on open tracks and wrapped on closed ones.
  double wrap(double s) const;
  Vec2 point_at(double s) const;
  double heading_at(double s) const;
  Vec2 segment_start(std::size_t i) const { return points_[i]; }
  Vec2 segment_end(std::size_t i) const { return points_[(i + 1) % points_.size()]; }
  double segment_s(std::size_t i) const { return cumulative_[i]; }

  Projection project(Vec2 p) const;

  /// First point on the track, at or after arc length `from_s`, that lies at
  /// distance `radius` from `center`. nullopt when an open track ends first.
  std::optional<Vec2> circle_intersection(Vec2 center, double radius, double from_s) const;

private:
  std::size_t segment_index(double s) const;

  std::vector<Vec2> points_;
  std::vector<double> cumulative_;
  bool closed_{false};
};

/// Straight segment sampled every `spacing` meters.
Polyline make_line(Vec2 start, double heading, double length, double spacing = 1.0);
/// Closed circle sampled with `segments` chords, counterclockwise from angle 0.
Polyline make_circle(Vec2 center, double radius, std::size_t segments = 720);

}  // namespace lmpdrive

#endif  // LMPDRIVE__GEOMETRY_HPP_
