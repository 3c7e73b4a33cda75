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

#include "lmpdrive/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace lmpdrive
{

double normalize_angle(double angle)
{
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a <= -std::numbers::pi) {
    a += two_pi;
  } else if (a > std::numbers::pi) {
    a -= two_pi;
  }
  return a;
}

Polyline::Polyline(std::vector<Vec2> points, bool closed) : points_(std::move(points)), closed_(closed)
{
  if (points_.size() < 2) {
    throw std::invalid_argument("polyline needs at least two waypoints");
  }
  const std::size_t n_segments = closed_ ? points_.size() : points_.size() - 1;
  cumulative_.reserve(n_segments + 1);
  cumulative_.push_back(0.0);
  for (std::size_t i = 0; i < n_segments; ++i) {
    const double len = distance(points_[i], points_[(i + 1) % points_.size()]);
    if (!(len > 0.0)) {
      throw std::invalid_argument("polyline waypoint spacing must be positive");
    }
    cumulative_.push_back(cumulative_.back() + len);
  }
}

double Polyline::wrap(double s) const
{
  const double len = length();
  if (closed_) {
    double w = std::fmod(s, len);
    if (w < 0.0) {
      w += len;
    }
    return w;
  }
  return std::clamp(s, 0.0, len);
}

std::size_t Polyline::segment_index(double s) const
{
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  if (it == cumulative_.begin()) {
    return 0;
  }
  const auto idx = static_cast<std::size_t>(std::distance(cumulative_.begin(), it)) - 1;
  return std::min(idx, segment_count() - 1);
}

Vec2 Polyline::point_at(double s) const
{
  const double w = wrap(s);
  const std::size_t i = segment_index(w);
  const double seg_len = cumulative_[i + 1] - cumulative_[i];
  const double t = (w - cumulative_[i]) / seg_len;
  return segment_start(i) + (segment_end(i) - segment_start(i)) * t;
}

double Polyline::heading_at(double s) const
{
  const std::size_t i = segment_index(wrap(s));
  const Vec2 d = segment_end(i) - segment_start(i);
  return std::atan2(d.y, d.x);
}

Projection Polyline::project(Vec2 p) const
{
  Projection best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < segment_count(); ++i) {
    const Vec2 a = segment_start(i);
    const Vec2 d = segment_end(i) - a;
    const double t = std::clamp(dot(p - a, d) / dot(d, d), 0.0, 1.0);
    const Vec2 foot = a + d * t;
    const double d2 = dot(p - foot, p - foot);
    if (d2 < best_d2) {
      best_d2 = d2;
      best.segment = i;
      best.s = cumulative_[i] + t * (cumulative_[i + 1] - cumulative_[i]);
      best.point = foot;
      const double side = cross(d, p - a);
      best.lateral = (side >= 0.0 ? 1.0 : -1.0) * std::sqrt(d2);
    }
  }
  return best;
}

std::optional<Vec2> Polyline::circle_intersection(Vec2 center, double radius, double from_s) const
{
  const double start = wrap(from_s);
  std::size_t i = segment_index(start);
  double t_min = (start - cumulative_[i]) / (cumulative_[i + 1] - cumulative_[i]);
  const std::size_t max_visits = segment_count() + 1;
  for (std::size_t visit = 0; visit < max_visits; ++visit) {
    const Vec2 a = segment_start(i);
    const Vec2 d = segment_end(i) - a;
    const Vec2 f = a - center;
    const double qa = dot(d, d);
    const double qb = 2.0 * dot(f, d);
    const double qc = dot(f, f) - radius * radius;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double t = (-qb + std::sqrt(disc)) / (2.0 * qa);
      if (t >= t_min && t <= 1.0) {
        return a + d * t;
      }
    }
    t_min = 0.0;
    ++i;
    if (i == segment_count()) {
      if (!closed_) {
        return std::nullopt;
      }
      i = 0;
    }
  }
  return std::nullopt;
}

Polyline make_line(Vec2 start, double heading, double length, double spacing)
{
  const auto n = static_cast<std::size_t>(std::ceil(length / spacing));
  std::vector<Vec2> pts;
  pts.reserve(n + 1);
  const Vec2 dir{std::cos(heading), std::sin(heading)};
  for (std::size_t i = 0; i <= n; ++i) {
    pts.push_back(start + dir * std::min(length, static_cast<double>(i) * spacing));
  }
  return Polyline(std::move(pts));
}

Polyline make_circle(Vec2 center, double radius, std::size_t segments)
{
  std::vector<Vec2> pts;
  pts.reserve(segments);
  for (std::size_t i = 0; i < segments; ++i) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(segments);
    pts.push_back(center + Vec2{radius * std::cos(th), radius * std::sin(th)});
  }
  return Polyline(std::move(pts), true);
}

}  // namespace lmpdrive
