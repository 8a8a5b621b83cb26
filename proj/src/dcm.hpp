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

#ifndef ANCHORCAST__DCM_HPP_
#define ANCHORCAST__DCM_HPP_

#include "anchors.hpp"
#include "geometry.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace anchorcast
{

/// Column order of the hand-crafted behavioral features.
enum Feature : std::size_t { kDir = 0, kOcc = 1, kCol = 2, kAcc = 3, kDec = 4 };
inline constexpr std::size_t kNumFeatures = 5;

/// Learnable utility coefficients, in Feature order.
struct BetaWeights
{
  std::array<double, kNumFeatures> values{};

  double & operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  static BetaWeights from(double dir, double occ, double col, double acc, double dec)
  {
    return BetaWeights{{dir, occ, col, acc, dec}};
  }
};

/// Shape constants of the behavioral functions. Fixed, never trained.
struct FixedDcmParams
{
  double perception_radius{4.0};      // m
  double occupancy_floor{0.2};        // m, d_min
  double collision_decay{1.0};        // m, lambda_col
  double collision_cone{M_PI / 12.0};  // rad, 15 deg
  double leader_cone{25.0 * M_PI / 180.0};
  double leader_range{5.0};  // m
  double alignment_cone{25.0 * M_PI / 180.0};
  double leader_exponent{1.0};
};

void validate(const FixedDcmParams & params);

/// Per-anchor feature rows.
struct DcmFeatures
{
  std::vector<std::array<double, kNumFeatures>> rows;

  std::size_t size() const { return rows.size(); }
  double operator()(std::size_t k, Feature f) const { return rows[k][f]; }
};

std::vector<double> keep_direction(const AnchorSet & set);
std::vector<double> occupancy(const NormalizedState & state, const AnchorSet & set, const FixedDcmParams & params);
std::vector<double> collision_avoidance(
  const NormalizedState & state, const AnchorSet & set, const FixedDcmParams & params);

struct LeaderFollower
{
  std::vector<double> accelerate;
  std::vector<double> decelerate;
};
LeaderFollower leader_follower(const NormalizedState & state, const AnchorSet & set, const FixedDcmParams & params);

DcmFeatures compute_features(const NormalizedState & state, const AnchorSet & set, const FixedDcmParams & params);

/// u_k = sum_j beta_j * feature_kj.
std::vector<double> utility(const DcmFeatures & features, const BetaWeights & beta);

/// Softmax with max subtraction.
std::vector<double> mnl_probabilities(const std::vector<double> & scores);
double log_sum_exp(const std::vector<double> & scores);

/// Score decomposition for one focal pedestrian at one step.
struct InterpretabilityReport
{
  DcmFeatures features;
  std::array<std::vector<double>, kNumFeatures> terms;  // beta_j * feature_j per anchor
  std::vector<double> motion;       // h_k
  std::vector<double> interaction;  // p_k
  std::vector<double> utility;      // u_k
  std::vector<double> score;        // s_k
  std::vector<double> probability;  // pi_k

  struct Map
  {
    std::string name;
    std::vector<double> values;
  };
  /// combined, nn, dcm, keep_direction, occupancy, collision, leader_follower.
  std::vector<Map> maps() const;
};

InterpretabilityReport explain(
  const NormalizedState & state, const AnchorSet & set, const BetaWeights & beta,
  const std::vector<double> & motion_logits, const std::vector<double> & interaction_logits,
  const FixedDcmParams & params);

}  // namespace anchorcast

#endif  // ANCHORCAST__DCM_HPP_
