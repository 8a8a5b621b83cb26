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

#ifndef ANCHORCAST__EVALUATION_HPP_
#define ANCHORCAST__EVALUATION_HPP_

#include "geometry.hpp"
#include "neural.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace anchorcast
{

struct EvalConfig
{
  double collision_threshold{0.2};  // m
  int interp_substeps{4};
  std::size_t top_k{3};
  bool neighbour_replay{false};  // neighbours follow ground truth instead of the model
};

void validate(const EvalConfig & cfg);

/// Autoregressive prediction. Steps before t_obs keep the ground truth; from
/// t_obs on, every pedestrian present at t_obs-2 and t_obs-1 advances by its
/// argmax anchor plus residual mean, all jointly. Pedestrians that cannot be
/// rolled out are dropped from the prediction window unless replayed.
/// `first_anchor` pins the primary's anchor at the first predicted step.
Scene rollout(
  const ModelParams & params, const Scene & scene, const Horizon & horizon, const EvalConfig & cfg,
  std::optional<std::size_t> first_anchor = std::nullopt, StepOutput * first_step = nullptr);

/// Runs the model over ground-truth inputs for one pedestrian up to step t
/// and returns that step's output; `input` receives the step's features.
StepOutput observe_step(
  const ModelParams & params, const Scene & scene, std::size_t focus, int t, StepInput * input = nullptr);

/// Mode j pins the j-th most probable first-step anchor of the primary and is
/// greedy afterwards; mode 1 equals rollout().
std::vector<Scene> topk_rollout(
  const ModelParams & params, const Scene & scene, const Horizon & horizon, const EvalConfig & cfg, std::size_t k);

/// Extrapolates the last observed velocity of every pedestrian.
Scene constant_velocity(const Scene & scene, const Horizon & horizon, const EvalConfig & cfg);

double ade(std::span<const Vec2> pred, std::span<const Vec2> gt);
double fde(std::span<const Vec2> pred, std::span<const Vec2> gt);

/// Primary positions over [t_obs, t_pred).
std::vector<Vec2> primary_future(const Scene & scene, const Horizon & horizon);

/// Smallest primary-neighbour distance over the prediction window, sampled
/// on `substeps` linear interpolation points per step.
double min_primary_distance(const Scene & predicted, const Horizon & horizon, int substeps);

bool collides(const Scene & predicted, const Horizon & horizon, const EvalConfig & cfg);

/// Percentage of scenes flagged by collides().
double col_i(std::span<const Scene> predicted, const Horizon & horizon, const EvalConfig & cfg);

struct SceneMetrics
{
  std::int64_t scene_id{0};
  double ade{0.0};
  double fde{0.0};
  bool collision{false};
  double top_ade{0.0};
  double top_fde{0.0};
};

struct MetricsReport
{
  std::string model;
  double ade{0.0};
  double fde{0.0};
  double col_i{0.0};  // percent
  double top_ade{0.0};
  double top_fde{0.0};
  std::size_t top_k{3};
  std::size_t n_scenes{0};
  std::vector<SceneMetrics> scenes;
};

class Predictor
{
public:
  virtual ~Predictor() = default;
  virtual std::string name() const = 0;
  /// Predicted scenes, most likely first.
  virtual std::vector<Scene> predict(const Scene & scene, const Horizon & horizon, const EvalConfig & cfg) const = 0;
};

class ModelPredictor : public Predictor
{
public:
  explicit ModelPredictor(const ModelParams & params, std::string name = "anchor-dcm") : params_(params), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  std::vector<Scene> predict(const Scene & scene, const Horizon & horizon, const EvalConfig & cfg) const override;

private:
  const ModelParams & params_;
  std::string name_;
};

class ConstantVelocityPredictor : public Predictor
{
public:
  std::string name() const override { return "constant-velocity"; }
  std::vector<Scene> predict(const Scene & scene, const Horizon & horizon, const EvalConfig & cfg) const override;
};

/// Returns the ground truth; a reference point for the metrics.
class GroundTruthPredictor : public Predictor
{
public:
  std::string name() const override { return "ground-truth"; }
  std::vector<Scene> predict(const Scene & scene, const Horizon &, const EvalConfig &) const override { return {scene}; }
};

/// Scenes are independent; `threads` > 1 splits them over workers without
/// changing any result.
MetricsReport evaluate(
  const Predictor & predictor, std::span<const Scene> dataset, const Horizon & horizon, const EvalConfig & cfg,
  std::size_t threads = 1);

}  // namespace anchorcast

#endif  // ANCHORCAST__EVALUATION_HPP_
