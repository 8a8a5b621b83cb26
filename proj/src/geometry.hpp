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

#ifndef ANCHORCAST__GEOMETRY_HPP_
#define ANCHORCAST__GEOMETRY_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace anchorcast
{

struct Vec2
{
  double x{0.0};
  double y{0.0};

  constexpr Vec2 operator+(const Vec2 & o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2 & o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2 & operator+=(const Vec2 & o)
  {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2 & operator-=(const Vec2 & o)
  {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr double dot(const Vec2 & o) const { return x * o.x + y * o.y; }
  constexpr double cross(const Vec2 & o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  constexpr double squared_norm() const { return x * x + y * y; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }

  friend constexpr bool operator==(const Vec2 &, const Vec2 &) = default;
};

inline Vec2 operator*(double s, const Vec2 & v) { return v * s; }

/// Counter-clockwise rotation by `angle` radians.
inline Vec2 rotate(const Vec2 & v, double angle)
{
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Unsigned angle between two vectors in [0, pi]; 0 if either is zero.
double angle_between(const Vec2 & a, const Vec2 & b);

/// One pedestrian's track, indexed by scene step. Absent frames are empty.
struct Trajectory
{
  int pedestrian_id{0};
  std::vector<std::optional<Vec2>> positions;

  bool present(int t) const
  {
    return t >= 0 && t < static_cast<int>(positions.size()) && positions[static_cast<std::size_t>(t)].has_value();
  }
  /// Throws kMissingFrame when the step is absent.
  Vec2 at(int t) const;
};

/// Observation/prediction split: steps [0, t_obs) are observed, [t_obs, t_pred) predicted.
struct Horizon
{
  int t_obs{9};
  int t_pred{21};
  double dt{0.4};

  int prediction_length() const { return t_pred - t_obs; }
};

struct Scene
{
  std::int64_t id{0};
  int primary_id{0};
  int start_frame{0};
  int frame_stride{1};
  std::vector<Trajectory> trajectories;  // sorted by pedestrian id
  std::map<int, Vec2> goals;             // optional, keyed by pedestrian id

  int n_steps() const;
  std::size_t primary_index() const;
  const Trajectory & primary() const { return trajectories[primary_index()]; }
  std::optional<std::size_t> index_of(int pedestrian_id) const;
  int frame_of(int step) const { return start_frame + step * frame_stride; }
};

/// Checks the structural invariants: sorted unique ids, equal track lengths,
/// finite positions, primary present over the whole horizon.
void validate_scene(const Scene & scene, const Horizon & horizon);

/// Rigid transform from world to the normalized frame of a focal pedestrian.
/// `rotation` is the focal heading in world coordinates.
struct FrameTransform
{
  Vec2 origin{};
  double rotation{0.0};

  Vec2 to_local(const Vec2 & world_point) const { return rotate(world_point - origin, -rotation); }
  Vec2 to_world_point(const Vec2 & local_point) const { return rotate(local_point, rotation) + origin; }
  Vec2 local_displacement(const Vec2 & world_displacement) const { return rotate(world_displacement, -rotation); }
  /// Rotates a normalized-frame displacement back to world; no translation.
  Vec2 to_world(const Vec2 & displacement) const { return rotate(displacement, rotation); }
};

/// Per-step displacement position(t) - position(t-1).
Vec2 velocity(const Trajectory & traj, int t);

/// atan2 heading of `v`, or `fallback` when the speed is below `eps`.
double heading(const Vec2 & v, double fallback, double eps);

/// Heading at step t, falling back to the most recent step whose speed
/// reached `eps`, and to +x when there is none.
double current_heading(const Trajectory & traj, int t, double eps);

struct NeighbourState
{
  int pedestrian_id{0};
  Vec2 position{};  // normalized frame
  Vec2 velocity{};  // normalized frame; zero when the previous frame is absent
};

/// A scene seen from one focal pedestrian at one step.
struct NormalizedState
{
  FrameTransform transform{};
  Vec2 velocity{};  // focal velocity in the normalized frame, (speed, 0) when moving
  double speed{0.0};
  std::vector<NeighbourState> neighbours;  // ordered by pedestrian id
};

inline constexpr double kDefaultHeadingEps = 1e-3;

/// Normalizes the scene at step t around trajectory `focus`. Neighbours absent
/// at t are left out.
NormalizedState normalize_scene_at(
  const Scene & scene, std::size_t focus, int t, double eps = kDefaultHeadingEps);

}  // namespace anchorcast

#endif  // ANCHORCAST__GEOMETRY_HPP_
