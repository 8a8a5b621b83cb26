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

#include "geometry.hpp"

#include "error.hpp"

#include <algorithm>
#include <string>

namespace anchorcast
{

double wrap_angle(double a)
{
  a = std::remainder(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

double angle_between(const Vec2 & a, const Vec2 & b)
{
  if (a.squared_norm() == 0.0 || b.squared_norm() == 0.0) return 0.0;
  return std::abs(std::atan2(a.cross(b), a.dot(b)));
}

Vec2 Trajectory::at(int t) const
{
  if (!present(t)) {
    fail(
      ErrorCode::kMissingFrame,
      "pedestrian " + std::to_string(pedestrian_id) + " has no position at step " + std::to_string(t));
  }
  return *positions[static_cast<std::size_t>(t)];
}

int Scene::n_steps() const
{
  return trajectories.empty() ? 0 : static_cast<int>(trajectories.front().positions.size());
}

std::optional<std::size_t> Scene::index_of(int pedestrian_id) const
{
  const auto it = std::lower_bound(
    trajectories.begin(), trajectories.end(), pedestrian_id,
    [](const Trajectory & t, int id) { return t.pedestrian_id < id; });
  if (it == trajectories.end() || it->pedestrian_id != pedestrian_id) return std::nullopt;
  return static_cast<std::size_t>(it - trajectories.begin());
}

std::size_t Scene::primary_index() const
{
  const auto idx = index_of(primary_id);
  if (!idx) {
    fail(
      ErrorCode::kMissingFrame,
      "scene " + std::to_string(id) + ": primary pedestrian " + std::to_string(primary_id) + " has no track");
  }
  return *idx;
}

void validate_scene(const Scene & scene, const Horizon & horizon)
{
  const std::string where = "scene " + std::to_string(scene.id) + ": ";
  if (horizon.t_obs < 2 || horizon.t_obs >= horizon.t_pred) {
    fail(ErrorCode::kValidation, where + "horizon requires 2 <= t_obs < t_pred");
  }
  if (scene.trajectories.empty()) fail(ErrorCode::kValidation, where + "no trajectories");
  const int n = scene.n_steps();
  if (n != horizon.t_pred) {
    fail(
      ErrorCode::kValidation,
      where + "spans " + std::to_string(n) + " steps, expected " + std::to_string(horizon.t_pred));
  }
  for (std::size_t i = 0; i < scene.trajectories.size(); ++i) {
    const auto & tr = scene.trajectories[i];
    if (i > 0 && scene.trajectories[i - 1].pedestrian_id >= tr.pedestrian_id) {
      fail(ErrorCode::kValidation, where + "trajectories must have unique ascending ids");
    }
    if (static_cast<int>(tr.positions.size()) != n) {
      fail(ErrorCode::kValidation, where + "track lengths differ");
    }
    for (const auto & p : tr.positions) {
      if (p && !p->finite()) fail(ErrorCode::kValidation, where + "non-finite position");
    }
  }
  const auto & primary = scene.trajectories[scene.primary_index()];
  for (int t = 0; t < n; ++t) {
    if (!primary.present(t)) {
      fail(
        ErrorCode::kValidation,
        where + "primary pedestrian " + std::to_string(scene.primary_id) + " missing at frame " +
          std::to_string(scene.frame_of(t)));
    }
  }
}

Vec2 velocity(const Trajectory & traj, int t) { return traj.at(t) - traj.at(t - 1); }

double heading(const Vec2 & v, double fallback, double eps)
{
  if (v.norm() < eps) return fallback;
  const double h = std::atan2(v.y, v.x);
  return h <= -M_PI ? M_PI : h;
}

double current_heading(const Trajectory & traj, int t, double eps)
{
  for (int s = t; s >= 1; --s) {
    if (!traj.present(s) || !traj.present(s - 1)) break;
    const Vec2 v = velocity(traj, s);
    if (v.norm() >= eps) return heading(v, 0.0, eps);
  }
  return 0.0;
}

NormalizedState normalize_scene_at(const Scene & scene, std::size_t focus, int t, double eps)
{
  const auto & me = scene.trajectories.at(focus);
  const Vec2 here = me.at(t);
  const Vec2 v_world = here - me.at(t - 1);

  NormalizedState state;
  state.transform = FrameTransform{here, current_heading(me, t, eps)};
  state.velocity = state.transform.local_displacement(v_world);
  state.speed = v_world.norm();
  state.neighbours.reserve(scene.trajectories.size() - 1);
  for (std::size_t j = 0; j < scene.trajectories.size(); ++j) {
    if (j == focus) continue;
    const auto & other = scene.trajectories[j];
    if (!other.present(t)) continue;
    NeighbourState n;
    n.pedestrian_id = other.pedestrian_id;
    n.position = state.transform.to_local(other.at(t));
    if (other.present(t - 1)) n.velocity = state.transform.local_displacement(velocity(other, t));
    state.neighbours.push_back(n);
  }
  return state;
}

}  // namespace anchorcast
