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

#include "evaluation.hpp"

#include "error.hpp"

#include <algorithm>
#include <limits>
#include <thread>

namespace anchorcast
{

void validate(const EvalConfig & cfg)
{
  if (!(cfg.collision_threshold > 0.0)) fail(ErrorCode::kValidation, "eval: collision_threshold must be positive");
  if (cfg.interp_substeps < 1) fail(ErrorCode::kValidation, "eval: interp_substeps must be >= 1");
  if (cfg.top_k == 0) fail(ErrorCode::kValidation, "eval: top_k must be positive");
}

namespace
{

// Pedestrians the model advances through the prediction window.
std::vector<std::size_t> rollout_set(const Scene & scene, const Horizon & horizon, const EvalConfig & cfg)
{
  const std::size_t primary = scene.primary_index();
  std::vector<std::size_t> set;
  for (std::size_t i = 0; i < scene.trajectories.size(); ++i) {
    if (cfg.neighbour_replay && i != primary) continue;
    const auto & tr = scene.trajectories[i];
    if (tr.present(horizon.t_obs - 2) && tr.present(horizon.t_obs - 1)) set.push_back(i);
  }
  return set;
}

Scene prediction_canvas(const Scene & scene, const Horizon & horizon, const EvalConfig & cfg)
{
  Scene out = scene;
  const std::size_t primary = scene.primary_index();
  for (std::size_t i = 0; i < out.trajectories.size(); ++i) {
    if (cfg.neighbour_replay && i != primary) continue;
    auto & pos = out.trajectories[i].positions;
    for (int t = horizon.t_obs; t < static_cast<int>(pos.size()); ++t) pos[static_cast<std::size_t>(t)].reset();
  }
  return out;
}

}  // namespace

Scene rollout(
  const ModelParams & params, const Scene & scene, const Horizon & horizon, const EvalConfig & cfg,
  std::optional<std::size_t> first_anchor, StepOutput * first_step)
{
  validate_scene(scene, horizon);
  const ModelConfig & mcfg = params.config();
  const std::vector<std::size_t> active = rollout_set(scene, horizon, cfg);
  const std::size_t primary = scene.primary_index();
  Scene buf = prediction_canvas(scene, horizon, cfg);
  const int n = buf.n_steps();
  const auto P = static_cast<Eigen::Index>(buf.trajectories.size());
  HiddenState memory = HiddenState::zeros(mcfg, P);

  for (int t = 1; t + 1 < n; ++t) {
    std::vector<std::size_t> who;
    for (std::size_t i : active) {
      if (buf.trajectories[i].present(t - 1) && buf.trajectories[i].present(t)) who.push_back(i);
    }
    if (who.empty()) continue;
    // Before t_obs - 1 the step only warms up the recurrent memory.
    std::vector<StepInput> inputs;
    inputs.reserve(who.size());
    for (std::size_t i : who) inputs.push_back(prepare_step(buf, i, t, mcfg));
    std::vector<const StepInput *> ptrs;
    for (const auto & in : inputs) ptrs.push_back(&in);
    HiddenState sub = HiddenState::zeros(mcfg, static_cast<Eigen::Index>(who.size()));
    for (std::size_t c = 0; c < who.size(); ++c) {
      sub.h.col(static_cast<Eigen::Index>(c)) = memory.h.col(static_cast<Eigen::Index>(who[c]));
      sub.c.col(static_cast<Eigen::Index>(c)) = memory.c.col(static_cast<Eigen::Index>(who[c]));
    }
    const std::vector<StepOutput> outs = forward_step(params, ptrs, sub);
    for (std::size_t c = 0; c < who.size(); ++c) {
      memory.h.col(static_cast<Eigen::Index>(who[c])) = sub.h.col(static_cast<Eigen::Index>(c));
      memory.c.col(static_cast<Eigen::Index>(who[c])) = sub.c.col(static_cast<Eigen::Index>(c));
    }
    if (t + 1 < horizon.t_obs) continue;

    for (std::size_t c = 0; c < who.size(); ++c) {
      const std::size_t i = who[c];
      const StepInput & in = inputs[c];
      const StepOutput & out = outs[c];
      std::size_t k = preferred_argmax(in.anchors, out.score);
      if (i == primary && t + 1 == horizon.t_obs) {
        if (first_anchor) {
          if (*first_anchor >= in.anchors.size()) fail(ErrorCode::kArgument, "rollout: pinned anchor out of range");
          k = *first_anchor;
        }
        if (first_step != nullptr) *first_step = out;
      }
      const Vec2 local = in.anchors[k].displacement + out.residuals[k].mean;
      auto & slot = buf.trajectories[i].positions[static_cast<std::size_t>(t + 1)];
      slot = buf.trajectories[i].at(t) + in.state.transform.to_world(local);
    }
  }
  return buf;
}

StepOutput observe_step(const ModelParams & params, const Scene & scene, std::size_t focus, int t, StepInput * input)
{
  const auto & tr = scene.trajectories.at(focus);
  if (t < 1 || !tr.present(t) || !tr.present(t - 1)) {
    fail(ErrorCode::kMissingFrame, "pedestrian " + std::to_string(tr.pedestrian_id) + " lacks frames for step " +
                                     std::to_string(t));
  }
  // Start from the earliest step with an unbroken history up to t.
  int first = t;
  while (first > 1 && tr.present(first - 2)) --first;
  HiddenState memory = HiddenState::zeros(params.config(), 1);
  StepOutput out;
  for (int s = first; s <= t; ++s) {
    StepInput in = prepare_step(scene, focus, s, params.config());
    const StepInput * ptr = &in;
    out = std::move(forward_step(params, std::span<const StepInput * const>(&ptr, 1), memory).front());
    if (s == t && input) *input = std::move(in);
  }
  return out;
}

std::vector<Scene> topk_rollout(
  const ModelParams & params, const Scene & scene, const Horizon & horizon, const EvalConfig & cfg, std::size_t k)
{
  const std::size_t K = params.config().num_anchors();
  if (k == 0 || k > K) fail(ErrorCode::kArgument, "topk_rollout: k must lie in [1, K]");
  StepOutput first;
  std::vector<Scene> modes;
  modes.push_back(rollout(params, scene, horizon, cfg, std::nullopt, &first));
  if (k == 1) return modes;
  // Ranking uses the primary's first predicted step.
  const Scene & s = scene;
  const auto & primary = s.primary();
  const double speed = (primary.at(horizon.t_obs - 1) - primary.at(horizon.t_obs - 2)).norm();
  const AnchorSet anchors = build_anchor_set(speed, params.config().anchors);
  const auto ranked = ranked_anchors(anchors, first.score);
  for (std::size_t j = 1; j < k; ++j) modes.push_back(rollout(params, scene, horizon, cfg, ranked[j]));
  return modes;
}

Scene constant_velocity(const Scene & scene, const Horizon & horizon, const EvalConfig & cfg)
{
  validate_scene(scene, horizon);
  const std::vector<std::size_t> active = rollout_set(scene, horizon, cfg);
  Scene buf = prediction_canvas(scene, horizon, cfg);
  for (std::size_t i : active) {
    auto & tr = buf.trajectories[i];
    const Vec2 v = tr.at(horizon.t_obs - 1) - tr.at(horizon.t_obs - 2);
    for (int t = horizon.t_obs; t < buf.n_steps(); ++t) tr.positions[static_cast<std::size_t>(t)] = tr.at(t - 1) + v;
  }
  return buf;
}

double ade(std::span<const Vec2> pred, std::span<const Vec2> gt)
{
  if (pred.size() != gt.size()) fail(ErrorCode::kArgument, "ade: prediction and ground truth lengths differ");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - gt[i]).norm();
  return sum / static_cast<double>(pred.size());
}

double fde(std::span<const Vec2> pred, std::span<const Vec2> gt)
{
  if (pred.size() != gt.size()) fail(ErrorCode::kArgument, "fde: prediction and ground truth lengths differ");
  if (pred.empty()) return 0.0;
  return (pred.back() - gt.back()).norm();
}

std::vector<Vec2> primary_future(const Scene & scene, const Horizon & horizon)
{
  const auto & p = scene.primary();
  std::vector<Vec2> out;
  for (int t = horizon.t_obs; t < horizon.t_pred; ++t) out.push_back(p.at(t));
  return out;
}

double min_primary_distance(const Scene & predicted, const Horizon & horizon, int substeps)
{
  const std::size_t primary = predicted.primary_index();
  const auto & me = predicted.trajectories[primary];
  double best = std::numeric_limits<double>::infinity();
  const int last = horizon.t_pred - 1;
  for (std::size_t j = 0; j < predicted.trajectories.size(); ++j) {
    if (j == primary) continue;
    const auto & other = predicted.trajectories[j];
    for (int t = horizon.t_obs; t <= last; ++t) {
      if (!other.present(t)) continue;
      if (t < last && other.present(t + 1)) {
        const Vec2 a0 = me.at(t), a1 = me.at(t + 1), b0 = other.at(t), b1 = other.at(t + 1);
        for (int s = 0; s < substeps; ++s) {
          const double f = static_cast<double>(s) / static_cast<double>(substeps);
          const Vec2 a = a0 + (a1 - a0) * f;
          const Vec2 b = b0 + (b1 - b0) * f;
          best = std::min(best, (a - b).norm());
        }
      } else {
        best = std::min(best, (me.at(t) - other.at(t)).norm());
      }
    }
  }
  return best;
}

bool collides(const Scene & predicted, const Horizon & horizon, const EvalConfig & cfg)
{
  return min_primary_distance(predicted, horizon, cfg.interp_substeps) < cfg.collision_threshold;
}

double col_i(std::span<const Scene> predicted, const Horizon & horizon, const EvalConfig & cfg)
{
  if (predicted.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto & s : predicted) hits += collides(s, horizon, cfg) ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::vector<Scene> ModelPredictor::predict(const Scene & scene, const Horizon & horizon, const EvalConfig & cfg) const
{
  return topk_rollout(params_, scene, horizon, cfg, std::min(cfg.top_k, params_.config().num_anchors()));
}

std::vector<Scene> ConstantVelocityPredictor::predict(
  const Scene & scene, const Horizon & horizon, const EvalConfig & cfg) const
{
  return {constant_velocity(scene, horizon, cfg)};
}

MetricsReport evaluate(
  const Predictor & predictor, std::span<const Scene> dataset, const Horizon & horizon, const EvalConfig & cfg,
  std::size_t threads)
{
  validate(cfg);
  if (dataset.empty()) fail(ErrorCode::kValidation, "evaluate: empty dataset");
  MetricsReport report;
  report.model = predictor.name();
  report.top_k = cfg.top_k;
  report.n_scenes = dataset.size();
  report.scenes.resize(dataset.size());

  const auto score = [&](std::size_t i) {
    const Scene & gt_scene = dataset[i];
    const std::vector<Vec2> gt = primary_future(gt_scene, horizon);
    const std::vector<Scene> modes = predictor.predict(gt_scene, horizon, cfg);
    SceneMetrics m;
    m.scene_id = gt_scene.id;
    const auto greedy = primary_future(modes.front(), horizon);
    m.ade = ade(greedy, gt);
    m.fde = fde(greedy, gt);
    m.collision = collides(modes.front(), horizon, cfg);
    m.top_ade = m.ade;
    m.top_fde = m.fde;
    for (std::size_t j = 1; j < modes.size(); ++j) {
      const auto p = primary_future(modes[j], horizon);
      const double a = ade(p, gt);
      if (a < m.top_ade) {
        m.top_ade = a;
        m.top_fde = fde(p, gt);
      }
    }
    report.scenes[i] = m;
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, dataset.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < dataset.size(); ++i) score(i);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < dataset.size(); i += workers) score(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto & th : pool) th.join();
    for (auto & e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::size_t hits = 0;
  for (const auto & m : report.scenes) {
    report.ade += m.ade;
    report.fde += m.fde;
    report.top_ade += m.top_ade;
    report.top_fde += m.top_fde;
    hits += m.collision ? 1 : 0;
  }
  const auto n = static_cast<double>(dataset.size());
  report.ade /= n;
  report.fde /= n;
  report.top_ade /= n;
  report.top_fde /= n;
  report.col_i = 100.0 * static_cast<double>(hits) / n;
  return report;
}

}  // namespace anchorcast
