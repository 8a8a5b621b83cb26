// Copyright 2026 The Anchorcast Authors
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

#ifndef ANCHORCAST_TESTS__FIXTURES_HPP_
#define ANCHORCAST_TESTS__FIXTURES_HPP_

#include "geometry.hpp"
#include "rng.hpp"

#include <cmath>
#include <vector>

namespace fixtures
{

using anchorcast::Scene;
using anchorcast::Trajectory;
using anchorcast::Vec2;

/// Scene whose first track is the primary; ids are 1, 2, ...
inline Scene make_scene(const std::vector<std::vector<Vec2>> & tracks, std::int64_t id = 0)
{
  Scene s;
  s.id = id;
  s.primary_id = 1;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    Trajectory t;
    t.pedestrian_id = static_cast<int>(i) + 1;
    for (const auto & p : tracks[i]) t.positions.emplace_back(p);
    s.trajectories.push_back(t);
  }
  return s;
}

/// Straight walk from `start` with constant per-step displacement.
inline std::vector<Vec2> line(Vec2 start, Vec2 step, int n = 21)
{
  std::vector<Vec2> out;
  for (int t = 0; t < n; ++t) out.push_back(start + step * static_cast<double>(t));
  return out;
}

/// Smooth random walkers around the origin; every track fully present.
inline Scene random_scene(anchorcast::Rng & rng, int n_peds, int n_steps = 21, std::int64_t id = 0)
{
  std::vector<std::vector<Vec2>> tracks;
  for (int i = 0; i < n_peds; ++i) {
    Vec2 p{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    double heading = rng.uniform(-M_PI, M_PI);
    double speed = rng.uniform(0.1, 0.6);
    std::vector<Vec2> tr;
    for (int t = 0; t < n_steps; ++t) {
      tr.push_back(p);
      heading += rng.uniform(-0.3, 0.3);
      speed = std::clamp(speed + rng.uniform(-0.05, 0.05), 0.05, 0.8);
      p += Vec2{std::cos(heading), std::sin(heading)} * speed;
    }
    tracks.push_back(tr);
  }
  return make_scene(tracks, id);
}

/// Applies x -> R(angle) x + shift to every position and goal.
inline Scene transformed(const Scene & s, double angle, Vec2 shift)
{
  Scene out = s;
  for (auto & tr : out.trajectories) {
    for (auto & p : tr.positions) {
      if (p) p = anchorcast::rotate(*p, angle) + shift;
    }
  }
  for (auto & [id, g] : out.goals) g = anchorcast::rotate(g, angle) + shift;
  return out;
}

}  // namespace fixtures

#endif  // ANCHORCAST_TESTS__FIXTURES_HPP_
