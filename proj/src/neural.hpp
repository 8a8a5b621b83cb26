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

#ifndef ANCHORCAST__NEURAL_HPP_
#define ANCHORCAST__NEURAL_HPP_

#include "anchors.hpp"
#include "dcm.hpp"
#include "geometry.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace anchorcast
{

struct ModelConfig
{
  std::size_t embedding_dim{64};
  std::size_t pooling_dim{256};
  std::size_t hidden_dim{256};
  std::size_t grid_size{16};
  double grid_resolution{0.6};  // m per cell
  bool goal_conditioning{false};
  std::size_t goal_dim{64};
  double heading_eps{kDefaultHeadingEps};
  double sigma_min{1e-3};
  double sigma_max{5.0};
  double rho_max{0.99};
  AnchorConfig anchors{};
  FixedDcmParams dcm{};

  std::size_t num_anchors() const { return anchors.size(); }
  std::size_t grid_channels() const { return grid_size * grid_size * 2; }
  std::size_t recurrent_input_dim() const
  {
    return embedding_dim + pooling_dim + (goal_conditioning ? goal_dim : 0);
  }
};

void validate(const ModelConfig & cfg);

enum class ParamGroup { kEmbedding = 0, kPooling, kRecurrent, kDecoder, kHeads, kBeta };
inline constexpr std::size_t kNumParamGroups = 6;
const char * group_name(ParamGroup g);

struct ParamBlock
{
  std::string name;
  ParamGroup group;
  Eigen::Index rows;
  Eigen::Index cols;
  std::size_t offset;
  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

/// Stable ordering of every parameter inside the flat vector.
class ParamLayout
{
public:
  explicit ParamLayout(const ModelConfig & cfg);

  const std::vector<ParamBlock> & blocks() const { return blocks_; }
  const ParamBlock & block(const std::string & name) const;
  std::size_t total() const { return total_; }
  /// "name rows cols offset" lines, one per block.
  std::string manifest() const;
  /// FNV-1a 64 of the manifest.
  std::uint64_t hash() const;

private:
  std::vector<ParamBlock> blocks_;
  std::size_t total_{0};
};

using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

/// Every learned weight plus beta, held in one flat vector.
class ModelParams
{
public:
  explicit ModelParams(const ModelConfig & cfg);

  /// Uniform in +-1/sqrt(fan_in) for the network, beta at zero.
  static ModelParams random(const ModelConfig & cfg, std::uint64_t seed);

  const ModelConfig & config() const { return config_; }
  const ParamLayout & layout() const { return layout_; }
  std::vector<double> & flat() { return flat_; }
  const std::vector<double> & flat() const { return flat_; }

  MatrixMap matrix(const std::string & name);
  ConstMatrixMap matrix(const std::string & name) const;

  BetaWeights beta() const;
  void set_beta(const BetaWeights & beta);
  /// Zeroes every network weight, leaving only beta.
  void zero_network();

private:
  ModelConfig config_;
  ParamLayout layout_;
  std::vector<double> flat_;
};

/// Gradient buffer with the same layout as ModelParams.
MatrixMap block_view(std::vector<double> & flat, const ParamBlock & b);
ConstMatrixMap block_view(const std::vector<double> & flat, const ParamBlock & b);

/// Sparse pooling grid: (channel index, value) pairs of the 2*G*G input.
using PoolingGrid = std::vector<std::pair<int, double>>;

/// Cells hold the average velocity of their occupants relative to the focal
/// pedestrian; the grid is centred on the focal pedestrian in its normalized frame.
PoolingGrid build_pooling_grid(const NormalizedState & state, const ModelConfig & cfg);

/// Everything the network consumes for one focal pedestrian at one step.
struct StepInput
{
  NormalizedState state;
  AnchorSet anchors;
  DcmFeatures features;
  PoolingGrid grid;
  Vec2 goal{};  // normalized goal displacement (goal conditioning only)
};

StepInput prepare_step(const Scene & scene, std::size_t focus, int t, const ModelConfig & cfg);

struct ResidualParams
{
  Vec2 mean{};
  Vec2 sigma{1.0, 1.0};
  double rho{0.0};
};

struct StepOutput
{
  std::vector<double> utility;      // u_k
  std::vector<double> motion;       // h_k
  std::vector<double> interaction;  // p_k
  std::vector<double> score;        // s_k
  std::vector<double> probability;  // pi_k
  std::vector<ResidualParams> residuals;
};

/// Recurrent memory, one column per pedestrian.
struct HiddenState
{
  Eigen::MatrixXd h;
  Eigen::MatrixXd c;

  static HiddenState zeros(const ModelConfig & cfg, Eigen::Index columns);
  Eigen::Index columns() const { return h.cols(); }
};

// Single-column building blocks.
Eigen::VectorXd embed_velocity(const Vec2 & v, const ModelParams & params);
Eigen::VectorXd directional_pooling(const NormalizedState & state, const ModelParams & params);
/// LSTM update; `goal_embedding` is ignored unless goal conditioning is on.
HiddenState recurrent_step(
  const HiddenState & state, const Eigen::VectorXd & embedding, const Eigen::VectorXd & interaction,
  const Eigen::VectorXd & goal_embedding, const ModelParams & params);
std::vector<ResidualParams> decode_residuals(const Eigen::VectorXd & hidden, const ModelParams & params);
std::pair<std::vector<double>, std::vector<double>> anchor_logit_heads(
  const Eigen::VectorXd & hidden, const Eigen::VectorXd & interaction, const ModelParams & params);

/// Full step for a batch of focal pedestrians: embeddings, pooling, recurrent
/// update, heads, residuals. `state` column i belongs to inputs[i] and is
/// advanced in place.
std::vector<StepOutput> forward_step(
  const ModelParams & params, std::span<const StepInput * const> inputs, HiddenState & state);

/// Teacher-forced supervision for one step.
struct StepTarget
{
  bool active{false};
  std::size_t anchor{0};  // closest anchor to the target displacement
  Vec2 displacement{};    // next-step displacement, normalized frame
};

/// One focal pedestrian run over a scene, steps 1 .. n-2.
struct Sequence
{
  std::int64_t scene_id{0};
  int pedestrian_id{0};
  std::vector<StepInput> steps;
  std::vector<StepTarget> targets;
};

/// Builds a sequence whose inputs come from `inputs` and whose targets are
/// the ground-truth track `truth`; the loss covers predictions of steps
/// [t_obs, t_pred).
Sequence prepare_sequence(
  const Scene & inputs, std::size_t focus, const Trajectory & truth, int t_obs, const ModelConfig & cfg);

struct GradientOptions
{
  /// Score with the utility only; residuals fixed at mean 0, sigma 1, rho 0.
  /// Equivalent to a zeroed network, gradient is non-zero for beta alone.
  bool dcm_only{false};
};

struct LossResult
{
  double loss{0.0};
  std::size_t terms{0};
  std::size_t correct{0};          // argmax pi == closest anchor
  std::vector<double> per_sequence;
};

/// Sum over sequences and active steps of -[log pi_khat + log N(y | a_khat + mu, Sigma)].
/// When `gradient` is non-null it receives d loss / d flat params.
LossResult loss_and_gradient(
  const ModelParams & params, std::span<const Sequence * const> batch, std::vector<double> * gradient,
  const GradientOptions & opts = {});

}  // namespace anchorcast

#endif  // ANCHORCAST__NEURAL_HPP_
