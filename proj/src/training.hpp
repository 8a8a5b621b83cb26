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

#ifndef ANCHORCAST__TRAINING_HPP_
#define ANCHORCAST__TRAINING_HPP_

#include "gaussian.hpp"
#include "neural.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace anchorcast
{

struct TrainConfig
{
  double learning_rate{1e-3};
  std::size_t batch_size{8};
  std::size_t epochs{25};
  std::uint64_t seed{42};
  double beta1{0.9};
  double beta2{0.999};
  double epsilon{1e-8};
  double clip_norm{0.0};  // global-norm clipping, 0 disables; 10 when switched on from the CLI
  bool teacher_forcing{true};
  bool include_neighbours{false};
  bool dcm_only{false};
};

void validate(const TrainConfig & cfg);

/// -[log pi_khat + log N(y | y_prev + a_khat + mu_khat, Sigma_khat)] for one
/// step; displacements are taken relative to y_prev.
double step_loss(const StepOutput & out, const Vec2 & gt_displacement, const AnchorSet & set);

struct AdamState
{
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step{0};

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update. Throws kNumeric on a non-finite gradient.
void adam_step(std::vector<double> & params, const std::vector<double> & grads, AdamState & state, const TrainConfig & cfg);

/// Scales `grads` so its L2 norm is at most `max_norm`; returns the original norm.
double clip_global_norm(std::vector<double> & grads, double max_norm);

struct EpochLog
{
  std::size_t epoch{0};
  double loss{0.0};      // mean per scene
  double accuracy{0.0};  // argmax pi == closest anchor
  double seconds{0.0};
};

using TrainLog = std::vector<EpochLog>;

/// Teacher-forced sequences for a scene: the primary, plus fully present
/// neighbours when requested.
std::vector<Sequence> scene_sequences(
  const Scene & scene, const Horizon & horizon, const ModelConfig & cfg, bool include_neighbours);

/// Epochs over seeded shuffles of the scenes with one Adam step per batch.
/// In dcm_only mode the network is zeroed and only beta moves.
TrainLog train(
  ModelParams & params, std::span<const Scene> dataset, const Horizon & horizon, const TrainConfig & cfg,
  const std::function<void(const EpochLog &)> & on_epoch = {});

/// One multinomial choice: per-alternative features and the chosen index.
struct ChoiceObservation
{
  std::vector<std::array<double, kNumFeatures>> features;
  std::size_t chosen{0};
};

std::vector<ChoiceObservation> choice_observations(std::span<const Sequence> sequences);

/// Every observed move of every pedestrian: the features at step t and the
/// anchor closest to the displacement from t to t+1.
std::vector<ChoiceObservation> observed_choices(std::span<const Scene> scenes, const ModelConfig & cfg);

double mnl_log_likelihood(std::span<const ChoiceObservation> obs, const BetaWeights & beta);

struct MnlFit
{
  BetaWeights beta;
  std::array<double, kNumFeatures> std_error{};  // sqrt diag of the inverse observed information
  double log_likelihood{0.0};
  std::size_t iterations{0};
  bool converged{false};
  std::size_t observations{0};
};

/// Maximum-likelihood beta by damped Newton iterations on the (concave) MNL
/// log-likelihood. Features without variation are held at zero and get an
/// infinite standard error.
MnlFit fit_mnl(std::span<const ChoiceObservation> obs, std::size_t max_iterations = 100, double tolerance = 1e-10);

}  // namespace anchorcast

#endif  // ANCHORCAST__TRAINING_HPP_
