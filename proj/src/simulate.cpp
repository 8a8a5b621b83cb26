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

#include "simulate.hpp"

#include "error.hpp"
#include "rng.hpp"

#include <algorithm>
#include <thread>

namespace anchorcast
{

void validate(const SimConfig & cfg)
{
  const auto check = [](bool ok, const char * what) {
    if (!ok) fail(ErrorCode::kValidation, std::string("sim: ") + what);
  };
  check(cfg.min_pedestrians >= 1, "min_pedestrians must be at least 1");
  check(cfg.max_pedestrians >= cfg.min_pedestrians, "max_pedestrians must be >= min_pedestrians");
  check(cfg.arena_radius > 0.0, "arena_radius must be positive");
  check(cfg.desired_speed > 0.0, "desired_speed must be positive");
  check(cfg.speed_jitter >= 0.0 && cfg.speed_jitter < cfg.desired_speed, "speed_jitter must lie in [0, desired_speed)");
  check(cfg.relaxation_time > 0.0, "relaxation_time must be positive");
  check(cfg.repulsion_strength >= 0.0, "repulsion_strength must be non-negative");
  check(cfg.repulsion_range > 0.0, "repulsion_range must be positive");
  check(cfg.body_radius >= 0.0, "body_radius must be non-negative");
  check(cfg.anisotropy >= 0.0 && cfg.anisotropy <= 1.0, "anisotropy must lie in [0, 1]");
  check(cfg.goal_tolerance > 0.0, "goal_tolerance must be positive");
  check(cfg.min_spawn_distance >= 0.2, "min_spawn_distance must be at least 0.2");
  check(cfg.substeps >= 1, "substeps must be at least 1");
  check(cfg.corridor.length > 0.0 && cfg.corridor.width > 0.0, "corridor dimensions must be positive");
  check(cfg.corridor.counterflow >= 0.0 && cfg.corridor.counterflow <= 1.0, "corridor.counterflow must lie in [0, 1]");
  check(cfg.corridor.heading_jitter >= 0.0 && cfg.corridor.heading_jitter < M_PI, "corridor.heading_jitter out of range");
  check(
    cfg.corridor.min_speed > 0.0 && cfg.corridor.max_speed >= cfg.corridor.min_speed,
    "corridor speeds must satisfy 0 < min_speed <= max_speed");
}

std::vector<std::vector<Vec2>> simulate_social_force(
  const SimConfig & cfg, const Horizon & horizon, const std::vector<Vec2> & starts, const std::vector<Vec2> & goals,
  const std::vector<double> & desired_speeds)
{
  const std::size_t n = starts.size();
  const double h = horizon.dt / cfg.substeps;
  const double contact = 2.0 * cfg.body_radius;

  const auto desired_velocity = [&](std::size_t i, const Vec2 & x) {
    const Vec2 to_goal = goals[i] - x;
    const double d = to_goal.norm();
    if (d < cfg.goal_tolerance) return Vec2{};
    return to_goal * (desired_speeds[i] / d);
  };

  std::vector<Vec2> x = starts;
  std::vector<Vec2> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = desired_velocity(i, x[i]);

  std::vector<std::vector<Vec2>> out(n);
  for (auto & track : out) track.reserve(static_cast<std::size_t>(horizon.t_pred));
  for (std::size_t i = 0; i < n; ++i) out[i].push_back(x[i]);

  std::vector<Vec2> force(n);
  for (int step = 1; step < horizon.t_pred; ++step) {
    for (int sub = 0; sub < cfg.substeps; ++sub) {
      for (std::size_t i = 0; i < n; ++i) {
        const Vec2 desired = desired_velocity(i, x[i]);
        Vec2 f = (desired - v[i]) / cfg.relaxation_time;
        const double speed = v[i].norm();
        const Vec2 facing = speed > 1e-9 ? v[i] / speed : Vec2{};
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          const Vec2 diff = x[i] - x[j];
          const double d = std::max(diff.norm(), 1e-9);
          const Vec2 away = diff / d;
          // Interactions in front count fully, those behind are damped.
          const double cos_phi = -away.dot(facing);
          const double weight = cfg.anisotropy + (1.0 - cfg.anisotropy) * 0.5 * (1.0 + cos_phi);
          f += away * (cfg.repulsion_strength * std::exp((contact - d) / cfg.repulsion_range) * weight);
        }
        force[i] = f;
      }
      for (std::size_t i = 0; i < n; ++i) {
        v[i] += force[i] * h;
        const double cap = 1.3 * desired_speeds[i];
        const double speed = v[i].norm();
        if (speed > cap) v[i] = v[i] * (cap / speed);
        x[i] += v[i] * h;
      }
    }
    for (std::size_t i = 0; i < n; ++i) out[i].push_back(x[i]);
  }
  return out;
}

namespace
{

Scene social_force_scene(const SimConfig & cfg, const Horizon & horizon, std::size_t index)
{
  Rng rng(derive_seed(cfg.seed, index));
  const int n = rng.range(cfg.min_pedestrians, cfg.max_pedestrians);

  std::vector<Vec2> starts;
  // Redraw the whole spawn set until every pair is far enough apart.
  for (;;) {
    starts.clear();
    for (int i = 0; i < n; ++i) {
      const double a = rng.uniform(-M_PI, M_PI);
      starts.push_back(Vec2{std::cos(a), std::sin(a)} * cfg.arena_radius);
    }
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      for (int j = i + 1; j < n && ok; ++j) {
        ok = (starts[static_cast<std::size_t>(i)] - starts[static_cast<std::size_t>(j)]).norm() >= cfg.min_spawn_distance;
      }
    }
    if (ok) break;
  }
  std::vector<Vec2> goals;
  std::vector<double> speeds;
  for (const auto & s : starts) {
    goals.push_back(-s);
    speeds.push_back(cfg.desired_speed + rng.uniform(-cfg.speed_jitter, cfg.speed_jitter));
  }
  const auto tracks = simulate_social_force(cfg, horizon, starts, goals, speeds);

  Scene scene;
  scene.id = static_cast<std::int64_t>(index);
  scene.start_frame = static_cast<int>(index) * horizon.t_pred;
  scene.frame_stride = 1;
  const int base = static_cast<int>(index) * cfg.max_pedestrians;
  scene.primary_id = base;
  for (int i = 0; i < n; ++i) {
    Trajectory tr;
    tr.pedestrian_id = base + i;
    for (const auto & p : tracks[static_cast<std::size_t>(i)]) tr.positions.emplace_back(p);
    scene.trajectories.push_back(std::move(tr));
    scene.goals[base + i] = goals[static_cast<std::size_t>(i)];
  }
  return scene;
}

}  // namespace

std::vector<Scene> generate_social_force(const SimConfig & cfg, const Horizon & horizon, std::size_t threads)
{
  validate(cfg);
  std::vector<Scene> scenes(cfg.n_scenes);
  threads = std::max<std::size_t>(1, std::min(threads, cfg.n_scenes));
  if (threads == 1) {
    for (std::size_t i = 0; i < cfg.n_scenes; ++i) scenes[i] = social_force_scene(cfg, horizon, i);
    return scenes;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < cfg.n_scenes; i += threads) scenes[i] = social_force_scene(cfg, horizon, i);
    });
  }
  for (auto & t : pool) t.join();
  return scenes;
}

std::size_t sample_categorical(const std::vector<double> & probabilities, double u)
{
  double acc = 0.0;
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    acc += probabilities[k];
    if (u < acc) return k;
  }
  return probabilities.size() - 1;
}

DcmSimulation simulate_dcm_agents(
  const BetaWeights & beta, const SimConfig & cfg, const ModelConfig & model, const Horizon & horizon,
  std::uint64_t seed, bool keep_choices)
{
  validate(cfg);
  validate(model.anchors);
  validate(model.dcm);
  const auto & corridor = cfg.corridor;

  DcmSimulation sim;
  for (std::size_t index = 0; index < cfg.n_scenes; ++index) {
    Rng rng(derive_seed(seed, index));
    const int n = rng.range(cfg.min_pedestrians, cfg.max_pedestrians);

    // Agents are placed one at a time; a crowded corridor would make
    // redrawing the whole set hopeless.
    std::vector<Vec2> starts;
    for (int i = 0; i < n; ++i) {
      for (int attempt = 0;; ++attempt) {
        if (attempt == 10000) {
          fail(ErrorCode::kValidation, "sim: corridor too small to place " + std::to_string(n) +
                                         " agents min_spawn_distance apart");
        }
        const Vec2 p{rng.uniform(-0.5, 0.5) * corridor.length, rng.uniform(-0.5, 0.5) * corridor.width};
        bool ok = true;
        for (const auto & q : starts) ok = ok && (p - q).norm() >= cfg.min_spawn_distance;
        if (ok) {
          starts.push_back(p);
          break;
        }
      }
    }

    Scene scene;
    scene.id = static_cast<std::int64_t>(index);
    scene.start_frame = static_cast<int>(index) * horizon.t_pred;
    const int base = static_cast<int>(index) * cfg.max_pedestrians;
    scene.primary_id = base;
    for (int i = 0; i < n; ++i) {
      const bool backwards = rng.uniform() < corridor.counterflow;
      const double direction = (backwards ? M_PI : 0.0) + rng.uniform(-corridor.heading_jitter, corridor.heading_jitter);
      const double speed = rng.uniform(corridor.min_speed, corridor.max_speed);
      Trajectory tr;
      tr.pedestrian_id = base + i;
      tr.positions.resize(static_cast<std::size_t>(horizon.t_pred));
      const Vec2 p0 = starts[static_cast<std::size_t>(i)];
      tr.positions[0] = p0;
      tr.positions[1] = p0 + Vec2{std::cos(direction), std::sin(direction)} * speed;
      scene.trajectories.push_back(std::move(tr));
    }

    // Everybody decides from the same snapshot, then all move together.
    for (int t = 1; t + 1 < horizon.t_pred; ++t) {
      std::vector<Vec2> next(static_cast<std::size_t>(n));
      for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        const NormalizedState state = normalize_scene_at(scene, i, t, model.heading_eps);
        const AnchorSet anchors = build_anchor_set(state.speed, model.anchors);
        const DcmFeatures features = compute_features(state, anchors, model.dcm);
        const auto pi = mnl_probabilities(utility(features, beta));
        const std::size_t k = sample_categorical(pi, rng.uniform());
        next[i] = scene.trajectories[i].at(t) + state.transform.to_world(anchors[k].displacement);
        if (keep_choices) {
          sim.choices.push_back(ChoiceRecord{scene.id, scene.trajectories[i].pedestrian_id, t, k, features.rows});
        }
      }
      for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        scene.trajectories[i].positions[static_cast<std::size_t>(t + 1)] = next[i];
      }
    }
    sim.scenes.push_back(std::move(scene));
  }
  return sim;
}

}  // namespace anchorcast
