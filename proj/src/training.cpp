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

#include "training.hpp"

#include "error.hpp"
#include "evaluation.hpp"
#include "rng.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <limits>
#include <numeric>

namespace anchorcast
{

GaussianNll bivariate_nll(const Vec2 & y, const Vec2 & mean, const Vec2 & sigma, double rho)
{
  if (!(sigma.x > 0.0) || !(sigma.y > 0.0) || !(std::abs(rho) < 1.0) || !std::isfinite(sigma.x) ||
      !std::isfinite(sigma.y)) {
    fail(ErrorCode::kNumeric, "bivariate normal: sigma must be positive and |rho| < 1");
  }
  double q = 1.0 - rho * rho;
  const bool q_clamped = q < kMinOneMinusRhoSq;
  if (q_clamped) q = kMinOneMinusRhoSq;
  const double dx = (y.x - mean.x) / sigma.x;
  const double dy = (y.y - mean.y) / sigma.y;
  const double z = dx * dx + dy * dy - 2.0 * rho * dx * dy;

  GaussianNll g;
  g.nll = std::log(2.0 * M_PI * sigma.x * sigma.y) + 0.5 * std::log(q) + z / (2.0 * q);
  g.d_mean.x = -(dx - rho * dy) / (q * sigma.x);
  g.d_mean.y = -(dy - rho * dx) / (q * sigma.y);
  g.d_sigma.x = 1.0 / sigma.x - dx * (dx - rho * dy) / (q * sigma.x);
  g.d_sigma.y = 1.0 / sigma.y - dy * (dy - rho * dx) / (q * sigma.y);
  g.d_rho = -dx * dy / q;
  if (!q_clamped) g.d_rho += -rho / q + rho * z / (q * q);
  return g;
}

void validate(const TrainConfig & cfg)
{
  if (!(cfg.learning_rate >= 0.0)) fail(ErrorCode::kValidation, "train: learning_rate must be >= 0");
  if (cfg.batch_size == 0) fail(ErrorCode::kValidation, "train: batch_size must be positive");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    fail(ErrorCode::kValidation, "train: moment decays must lie in [0, 1)");
  }
  if (!(cfg.epsilon > 0.0)) fail(ErrorCode::kValidation, "train: epsilon must be positive");
  if (!(cfg.clip_norm >= 0.0)) fail(ErrorCode::kValidation, "train: clip_norm must be >= 0");
}

double step_loss(const StepOutput & out, const Vec2 & gt_displacement, const AnchorSet & set)
{
  const std::size_t k = closest_anchor(set, gt_displacement);
  const double log_pi = out.score[k] - log_sum_exp(out.score);
  const auto & r = out.residuals[k];
  return -(log_pi + bivariate_log_prob(gt_displacement, set[k].displacement + r.mean, r.sigma, r.rho));
}

void adam_step(std::vector<double> & params, const std::vector<double> & grads, AdamState & state, const TrainConfig & cfg)
{
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    fail(ErrorCode::kArgument, "adam: parameter, gradient and moment lengths differ");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      fail(ErrorCode::kNumeric, "adam: non-finite gradient at parameter index " + std::to_string(i));
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

double clip_global_norm(std::vector<double> & grads, double max_norm)
{
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (double & g : grads) g *= s;
  }
  return norm;
}

namespace
{

bool fully_present(const Trajectory & t)
{
  for (const auto & p : t.positions) {
    if (!p) return false;
  }
  return true;
}

std::vector<Sequence> sequences_from(
  const Scene & inputs, const Scene & truth, const Horizon & horizon, const ModelConfig & cfg, bool include_neighbours)
{
  std::vector<Sequence> out;
  const std::size_t primary = truth.primary_index();
  for (std::size_t i = 0; i < truth.trajectories.size(); ++i) {
    if (i != primary && !(include_neighbours && fully_present(truth.trajectories[i]))) continue;
    if (i != primary && !fully_present(inputs.trajectories[i])) continue;
    out.push_back(prepare_sequence(inputs, i, truth.trajectories[i], horizon.t_obs, cfg));
  }
  return out;
}

}  // namespace

std::vector<Sequence> scene_sequences(
  const Scene & scene, const Horizon & horizon, const ModelConfig & cfg, bool include_neighbours)
{
  return sequences_from(scene, scene, horizon, cfg, include_neighbours);
}

TrainLog train(
  ModelParams & params, std::span<const Scene> dataset, const Horizon & horizon, const TrainConfig & cfg,
  const std::function<void(const EpochLog &)> & on_epoch)
{
  validate(cfg);
  if (dataset.empty()) fail(ErrorCode::kValidation, "train: empty dataset");
  for (const auto & s : dataset) validate_scene(s, horizon);
  if (cfg.dcm_only) params.zero_network();

  const ModelConfig & mcfg = params.config();
  std::vector<std::vector<Sequence>> cached;
  if (cfg.teacher_forcing || cfg.dcm_only) {
    cached.reserve(dataset.size());
    for (const auto & s : dataset) cached.push_back(scene_sequences(s, horizon, mcfg, cfg.include_neighbours));
  }

  const GradientOptions gopts{cfg.dcm_only};
  AdamState adam(params.flat().size());
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad;
  TrainLog log;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t terms = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::vector<Sequence>> fresh;
      std::vector<const Sequence *> batch;
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t idx = order[i];
        if (!cached.empty()) {
          for (const auto & s : cached[idx]) batch.push_back(&s);
        } else {
          // Free-running: inputs after t_obs are the model's own rollout.
          const Scene rolled = rollout(params, dataset[idx], horizon, EvalConfig{});
          fresh.push_back(sequences_from(rolled, dataset[idx], horizon, mcfg, cfg.include_neighbours));
        }
      }
      for (const auto & f : fresh) {
        for (const auto & s : f) batch.push_back(&s);
      }
      const LossResult r = loss_and_gradient(params, batch, &grad, gopts);
      loss_sum += r.loss;
      terms += r.terms;
      correct += r.correct;
      if (cfg.clip_norm > 0.0) clip_global_norm(grad, cfg.clip_norm);
      adam_step(params.flat(), grad, adam, cfg);
    }
    EpochLog e;
    e.epoch = epoch;
    e.loss = loss_sum / static_cast<double>(dataset.size());
    e.accuracy = terms > 0 ? static_cast<double>(correct) / static_cast<double>(terms) : 0.0;
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    log.push_back(e);
    if (on_epoch) on_epoch(e);
  }
  return log;
}

std::vector<ChoiceObservation> choice_observations(std::span<const Sequence> sequences)
{
  std::vector<ChoiceObservation> out;
  for (const auto & seq : sequences) {
    for (std::size_t t = 0; t < seq.steps.size(); ++t) {
      if (!seq.targets[t].active) continue;
      out.push_back(ChoiceObservation{seq.steps[t].features.rows, seq.targets[t].anchor});
    }
  }
  return out;
}

std::vector<ChoiceObservation> observed_choices(std::span<const Scene> scenes, const ModelConfig & cfg)
{
  std::vector<ChoiceObservation> out;
  for (const auto & scene : scenes) {
    for (std::size_t i = 0; i < scene.trajectories.size(); ++i) {
      const auto & tr = scene.trajectories[i];
      for (int t = 1; t + 1 < scene.n_steps(); ++t) {
        if (!tr.present(t - 1) || !tr.present(t) || !tr.present(t + 1)) continue;
        const NormalizedState state = normalize_scene_at(scene, i, t, cfg.heading_eps);
        const AnchorSet anchors = build_anchor_set(state.speed, cfg.anchors);
        const Vec2 move = state.transform.local_displacement(tr.at(t + 1) - tr.at(t));
        out.push_back(ChoiceObservation{compute_features(state, anchors, cfg.dcm).rows, closest_anchor(anchors, move)});
      }
    }
  }
  return out;
}

double mnl_log_likelihood(std::span<const ChoiceObservation> obs, const BetaWeights & beta)
{
  double ll = 0.0;
  std::vector<double> u;
  for (const auto & o : obs) {
    u.resize(o.features.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < kNumFeatures; ++j) acc += beta[j] * o.features[k][j];
      u[k] = acc;
    }
    ll += u[o.chosen] - log_sum_exp(u);
  }
  return ll;
}

MnlFit fit_mnl(std::span<const ChoiceObservation> obs, std::size_t max_iterations, double tolerance)
{
  using Vec5 = Eigen::Matrix<double, kNumFeatures, 1>;
  using Mat5 = Eigen::Matrix<double, kNumFeatures, kNumFeatures>;
  if (obs.empty()) fail(ErrorCode::kValidation, "mnl fit: no choice observations");

  const auto score_and_information = [&](const BetaWeights & beta, Vec5 & grad, Mat5 & info) {
    grad.setZero();
    info.setZero();
    std::vector<double> u;
    for (const auto & o : obs) {
      const std::size_t K = o.features.size();
      u.resize(K);
      for (std::size_t k = 0; k < K; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < kNumFeatures; ++j) acc += beta[j] * o.features[k][j];
        u[k] = acc;
      }
      const double lse = log_sum_exp(u);
      Vec5 mean = Vec5::Zero();
      Mat5 second = Mat5::Zero();
      for (std::size_t k = 0; k < K; ++k) {
        const double p = std::exp(u[k] - lse);
        const Vec5 f = Eigen::Map<const Vec5>(o.features[k].data());
        mean += p * f;
        second += p * f * f.transpose();
      }
      grad += Eigen::Map<const Vec5>(o.features[o.chosen].data()) - mean;
      info += second - mean * mean.transpose();
    }
  };

  // Features that never vary within a choice set carry no information.
  Vec5 g0;
  Mat5 info0;
  score_and_information(BetaWeights{}, g0, info0);
  std::array<bool, kNumFeatures> active{};
  std::vector<int> idx;
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    active[j] = info0(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) > 1e-12;
    if (active[j]) idx.push_back(static_cast<int>(j));
  }
  const auto n = static_cast<Eigen::Index>(idx.size());

  MnlFit fit;
  fit.observations = obs.size();
  BetaWeights beta{};
  double ll = mnl_log_likelihood(obs, beta);
  Vec5 grad;
  Mat5 info;
  for (std::size_t it = 0; it < max_iterations && n > 0; ++it) {
    score_and_information(beta, grad, info);
    Eigen::VectorXd g(n);
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      g(a) = grad(idx[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < n; ++b) A(a, b) = info(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      fail(ErrorCode::kNumeric, "mnl fit: observed information is not positive definite");
    }
    const Eigen::VectorXd step = ldlt.solve(g);
    fit.iterations = it + 1;
    // Backtracking keeps every iterate an ascent step.
    double scale = 1.0;
    BetaWeights trial;
    double trial_ll = -std::numeric_limits<double>::infinity();
    for (int tries = 0; tries < 40; ++tries) {
      trial = beta;
      for (Eigen::Index a = 0; a < n; ++a) trial[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])] += scale * step(a);
      trial_ll = mnl_log_likelihood(obs, trial);
      if (trial_ll >= ll - 1e-12 * std::abs(ll)) break;
      scale *= 0.5;
    }
    beta = trial;
    ll = trial_ll;
    if (scale * step.cwiseAbs().maxCoeff() < tolerance) {
      fit.converged = true;
      break;
    }
  }

  score_and_information(beta, grad, info);
  Eigen::MatrixXd A(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) A(a, b) = info(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
  }
  const Eigen::MatrixXd cov = n > 0 ? Eigen::MatrixXd(A.inverse()) : Eigen::MatrixXd();
  fit.std_error.fill(std::numeric_limits<double>::infinity());
  for (Eigen::Index a = 0; a < n; ++a) {
    fit.std_error[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])] = std::sqrt(cov(a, a));
  }
  fit.beta = beta;
  fit.log_likelihood = ll;
  return fit;
}

}  // namespace anchorcast
