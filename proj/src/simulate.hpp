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

#ifndef ANCHORCAST__SIMULATE_HPP_
#define ANCHORCAST__SIMULATE_HPP_

#include "data.hpp"
#include "dcm.hpp"
#include "geometry.hpp"
#include "neural.hpp"

#include <cstdint>
#include <vector>

namespace anchorcast
{

/// Layout of the choice-making agent simulator: a straight corridor with
/// two opposing streams.
struct CorridorConfig
{
  double length{10.0};       // m
  double width{3.0};         // m
  double counterflow{0.0};   // share of agents walking towards -x
  double heading_jitter{5.0 * M_PI / 180.0};
  double min_speed{0.05};  // m/step
  double max_speed{1.0};   // m/step
};

struct SimConfig
{
  std::size_t n_scenes{100};
  int min_pedestrians{2};
  int max_pedestrians{6};
  double arena_radius{4.0};     // m
  double desired_speed{1.0};    // m/s
  double speed_jitter{0.2};     // m/s, uniform half-width
  double relaxation_time{0.5};  // s
  double repulsion_strength{2.0};  // m/s^2
  double repulsion_range{0.8};     // m
  double body_radius{0.3};         // m
  double anisotropy{0.5};  // weight of interactions from behind
  double goal_tolerance{0.2};      // m
  double min_spawn_distance{0.5};  // m
  int substeps{10};
  std::uint64_t seed{7};
  CorridorConfig corridor{};
};

void validate(const SimConfig & cfg);

/// Circle-crossing scenes under social-force dynamics. Agent 0 of every scene
/// is the primary; goals are recorded. Scene i covers frames
/// [i * t_pred, (i + 1) * t_pred).
std::vector<Scene> generate_social_force(const SimConfig & cfg, const Horizon & horizon, std::size_t threads = 1);

/// One social-force episode with given starts and goals. Exposed for tests.
std::vector<std::vector<Vec2>> simulate_social_force(
  const SimConfig & cfg, const Horizon & horizon, const std::vector<Vec2> & starts, const std::vector<Vec2> & goals,
  const std::vector<double> & desired_speeds);

struct DcmSimulation
{
  std::vector<Scene> scenes;
  std::vector<ChoiceRecord> choices;
};

/// Agents that pick their next anchor by sampling the logit model with the
/// given beta. Every agent chooses at every step t = 1 .. t_pred-2.
/// The choice log is left empty when `keep_choices` is false.
DcmSimulation simulate_dcm_agents(
  const BetaWeights & beta, const SimConfig & cfg, const ModelConfig & model, const Horizon & horizon,
  std::uint64_t seed, bool keep_choices = true);

/// Draws an index from a probability vector.
std::size_t sample_categorical(const std::vector<double> & probabilities, double u);

}  // namespace anchorcast

#endif  // ANCHORCAST__SIMULATE_HPP_
