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

#include "dcm.hpp"

#include "error.hpp"

#include <algorithm>
#include <limits>

namespace anchorcast
{

void validate(const FixedDcmParams & p)
{
  const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  const auto cone = [](double v) { return v > 0.0 && v < M_PI; };
  if (!positive(p.perception_radius) || !positive(p.occupancy_floor) || !positive(p.collision_decay) ||
      !positive(p.leader_range) || !positive(p.leader_exponent)) {
    fail(ErrorCode::kValidation, "dcm: ranges, floors and exponents must be positive");
  }
  if (!cone(p.collision_cone) || !cone(p.leader_cone) || !cone(p.alignment_cone)) {
    fail(ErrorCode::kValidation, "dcm: cones must lie in (0, pi)");
  }
}

namespace
{

struct Sector
{
  double lo;
  double hi;
};

// Half the gap to each adjacent offset; the outermost slots mirror their inner half-gap.
Sector direction_sector(const std::vector<double> & offsets, std::size_t d)
{
  if (offsets.size() == 1) return {-M_PI, M_PI};
  const double inner_lo = d > 0 ? 0.5 * (offsets[d] - offsets[d - 1]) : 0.5 * (offsets[d + 1] - offsets[d]);
  const double inner_hi =
    d + 1 < offsets.size() ? 0.5 * (offsets[d + 1] - offsets[d]) : 0.5 * (offsets[d] - offsets[d - 1]);
  return {offsets[d] - inner_lo, offsets[d] + inner_hi};
}

std::vector<double> offsets_of(const AnchorSet & set)
{
  std::vector<double> offsets;
  for (const auto & a : set.anchors) {
    if (a.speed_slot != 0) break;
    offsets.push_back(a.direction_offset);
  }
  return offsets;
}

double bearing(const Vec2 & p) { return std::atan2(p.y, p.x); }

}  // namespace

std::vector<double> keep_direction(const AnchorSet & set)
{
  std::vector<double> dir(set.size());
  for (std::size_t k = 0; k < set.size(); ++k) dir[k] = std::abs(set[k].direction_offset);
  return dir;
}

std::vector<double> occupancy(const NormalizedState & state, const AnchorSet & set, const FixedDcmParams & params)
{
  std::vector<double> occ(set.size(), 0.0);
  const auto offsets = offsets_of(set);
  for (const auto & n : state.neighbours) {
    if (n.position.norm() > params.perception_radius) continue;
    const double b = bearing(n.position);
    for (std::size_t k = 0; k < set.size(); ++k) {
      const Sector sec = direction_sector(offsets, set[k].direction_slot);
      if (b < sec.lo || b > sec.hi) continue;
      const double d = (n.position - set[k].displacement).norm();
      occ[k] += 1.0 / std::max(d, params.occupancy_floor);
    }
  }
  return occ;
}

std::vector<double> collision_avoidance(
  const NormalizedState & state, const AnchorSet & set, const FixedDcmParams & params)
{
  std::vector<double> col(set.size(), 0.0);
  for (const auto & n : state.neighbours) {
    const double r = n.position.norm();
    if (r > params.perception_radius || r == 0.0) continue;
    // Closing on the focal pedestrian.
    if (!(n.velocity.dot(-n.position / r) > 0.0)) continue;
    for (std::size_t k = 0; k < set.size(); ++k) {
      const Vec2 to_anchor = set[k].displacement - n.position;
      if (angle_between(n.velocity, to_anchor) >= params.collision_cone) continue;
      col[k] += std::exp(-to_anchor.norm() / params.collision_decay);
    }
  }
  return col;
}

LeaderFollower leader_follower(const NormalizedState & state, const AnchorSet & set, const FixedDcmParams & params)
{
  LeaderFollower lf{std::vector<double>(set.size(), 0.0), std::vector<double>(set.size(), 0.0)};
  const Vec2 forward{1.0, 0.0};
  for (std::size_t k = 0; k < set.size(); ++k) {
    const double m = set[k].speed_multiplier;
    if (m == 1.0) continue;
    const NeighbourState * leader = nullptr;
    double leader_dist = std::numeric_limits<double>::infinity();
    for (const auto & n : state.neighbours) {
      const double r = n.position.norm();
      if (r > params.leader_range || r == 0.0) continue;
      if (std::abs(wrap_angle(bearing(n.position) - set[k].direction_offset)) > params.leader_cone) continue;
      if (n.velocity.squared_norm() == 0.0 || angle_between(n.velocity, forward) > params.alignment_cone) continue;
      // Neighbours arrive sorted by id, so strict < keeps the lower id on ties.
      if (r < leader_dist) {
        leader_dist = r;
        leader = &n;
      }
    }
    if (leader == nullptr) continue;
    const double dv = leader->velocity.norm() - state.speed;
    const double weight = std::pow(std::max(leader_dist, params.occupancy_floor), -params.leader_exponent);
    if (m > 1.0) lf.accelerate[k] = std::max(dv, 0.0) * weight;
    if (m < 1.0) lf.decelerate[k] = std::max(-dv, 0.0) * weight;
  }
  return lf;
}

DcmFeatures compute_features(const NormalizedState & state, const AnchorSet & set, const FixedDcmParams & params)
{
  const auto dir = keep_direction(set);
  const auto occ = occupancy(state, set, params);
  const auto col = collision_avoidance(state, set, params);
  const auto lf = leader_follower(state, set, params);
  DcmFeatures f;
  f.rows.resize(set.size());
  for (std::size_t k = 0; k < set.size(); ++k) {
    f.rows[k] = {dir[k], occ[k], col[k], lf.accelerate[k], lf.decelerate[k]};
  }
  return f;
}

std::vector<double> utility(const DcmFeatures & features, const BetaWeights & beta)
{
  std::vector<double> u(features.size(), 0.0);
  for (std::size_t k = 0; k < features.size(); ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < kNumFeatures; ++j) acc += beta[j] * features.rows[k][j];
    u[k] = acc;
  }
  return u;
}

double log_sum_exp(const std::vector<double> & scores)
{
  const double m = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - m);
  return m + std::log(sum);
}

std::vector<double> mnl_probabilities(const std::vector<double> & scores)
{
  for (double s : scores) {
    if (!std::isfinite(s)) fail(ErrorCode::kNumeric, "mnl: non-finite score");
  }
  const double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    p[k] = std::exp(scores[k] - m);
    sum += p[k];
  }
  for (double & v : p) v /= sum;
  return p;
}

std::vector<InterpretabilityReport::Map> InterpretabilityReport::maps() const
{
  const std::size_t K = score.size();
  std::vector<double> nn(K), lf(K);
  for (std::size_t k = 0; k < K; ++k) {
    nn[k] = motion[k] + interaction[k];
    lf[k] = terms[kAcc][k] + terms[kDec][k];
  }
  return {
    {"combined", score},          {"nn", nn},
    {"dcm", utility},             {"keep_direction", terms[kDir]},
    {"occupancy", terms[kOcc]},   {"collision", terms[kCol]},
    {"leader_follower", lf},
  };
}

InterpretabilityReport explain(
  const NormalizedState & state, const AnchorSet & set, const BetaWeights & beta,
  const std::vector<double> & motion_logits, const std::vector<double> & interaction_logits,
  const FixedDcmParams & params)
{
  const std::size_t K = set.size();
  if (motion_logits.size() != K || interaction_logits.size() != K) {
    fail(ErrorCode::kArgument, "explain: logit maps must have one value per anchor");
  }
  InterpretabilityReport r;
  r.features = compute_features(state, set, params);
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    r.terms[j].resize(K);
    for (std::size_t k = 0; k < K; ++k) r.terms[j][k] = beta[j] * r.features.rows[k][j];
  }
  r.motion = motion_logits;
  r.interaction = interaction_logits;
  r.utility = utility(r.features, beta);
  r.score.resize(K);
  for (std::size_t k = 0; k < K; ++k) r.score[k] = r.utility[k] + motion_logits[k] + interaction_logits[k];
  r.probability = mnl_probabilities(r.score);
  return r;
}

}  // namespace anchorcast
