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

#include "anchors.hpp"

#include "error.hpp"

#include <algorithm>
#include <numeric>

namespace anchorcast
{

void validate(const AnchorConfig & cfg)
{
  if (cfg.direction_offsets.empty() || cfg.speed_multipliers.empty()) {
    fail(ErrorCode::kValidation, "anchors: need at least one direction and one speed level");
  }
  const auto & d = cfg.direction_offsets;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i]) || std::abs(d[i]) >= M_PI) {
      fail(ErrorCode::kValidation, "anchors: direction offsets must lie in (-pi, pi)");
    }
    if (i > 0 && !(d[i - 1] < d[i])) fail(ErrorCode::kValidation, "anchors: direction offsets must be sorted");
    if (std::abs(d[i] + d[d.size() - 1 - i]) > 1e-12) {
      fail(ErrorCode::kValidation, "anchors: direction offsets must be symmetric about 0");
    }
  }
  const auto & m = cfg.speed_multipliers;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!(m[i] > 0.0) || !std::isfinite(m[i])) {
      fail(ErrorCode::kValidation, "anchors: speed multipliers must be positive");
    }
    if (i > 0 && !(m[i - 1] < m[i])) fail(ErrorCode::kValidation, "anchors: speed multipliers must be sorted");
  }
  if (!(cfg.min_radius > 0.0)) fail(ErrorCode::kValidation, "anchors: min_radius must be positive");
}

AnchorSet build_anchor_set(double current_speed, const AnchorConfig & cfg)
{
  validate(cfg);
  if (!(current_speed >= 0.0)) fail(ErrorCode::kValidation, "anchors: current speed must be >= 0");
  AnchorSet set;
  set.radius = std::max(current_speed, cfg.min_radius);
  set.anchors.reserve(cfg.size());
  for (std::size_t s = 0; s < cfg.n_speeds(); ++s) {
    for (std::size_t d = 0; d < cfg.n_directions(); ++d) {
      const double phi = cfg.direction_offsets[d];
      const double r = set.radius * cfg.speed_multipliers[s];
      set.anchors.push_back(Anchor{{r * std::cos(phi), r * std::sin(phi)}, d, s, phi, cfg.speed_multipliers[s]});
    }
  }
  return set;
}

std::size_t closest_anchor(const AnchorSet & set, const Vec2 & gt_displacement)
{
  std::size_t best = 0;
  double best_d2 = (set[0].displacement - gt_displacement).squared_norm();
  for (std::size_t k = 1; k < set.size(); ++k) {
    const double d2 = (set[k].displacement - gt_displacement).squared_norm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = k;
    }
  }
  return best;
}

namespace
{

bool prefer(const AnchorSet & set, std::size_t a, std::size_t b)
{
  const double da = std::abs(set[a].direction_offset);
  const double db = std::abs(set[b].direction_offset);
  if (da != db) return da < db;
  const double ma = std::abs(set[a].speed_multiplier - 1.0);
  const double mb = std::abs(set[b].speed_multiplier - 1.0);
  if (ma != mb) return ma < mb;
  return a < b;
}

}  // namespace

std::size_t preferred_argmax(const AnchorSet & set, const std::vector<double> & scores)
{
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best] || (scores[k] == scores[best] && prefer(set, k, best))) best = k;
  }
  return best;
}

std::vector<std::size_t> ranked_anchors(const AnchorSet & set, const std::vector<double> & scores)
{
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return prefer(set, a, b);
  });
  return order;
}

}  // namespace anchorcast
