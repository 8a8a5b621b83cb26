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

#ifndef ANCHORCAST__ANCHORS_HPP_
#define ANCHORCAST__ANCHORS_HPP_

#include "geometry.hpp"

#include <cstddef>
#include <vector>

namespace anchorcast
{

/// Radial grid of one-step intents. Anchor k sits in speed row k / N_d and
/// direction column k % N_d.
struct AnchorConfig
{
  std::vector<double> direction_offsets{-M_PI / 3.0, -M_PI / 6.0, 0.0, M_PI / 6.0, M_PI / 3.0};
  std::vector<double> speed_multipliers{0.5, 1.0, 1.5};
  double min_radius{0.04};

  std::size_t n_directions() const { return direction_offsets.size(); }
  std::size_t n_speeds() const { return speed_multipliers.size(); }
  std::size_t size() const { return n_directions() * n_speeds(); }
};

/// Throws kValidation naming the broken invariant.
void validate(const AnchorConfig & cfg);

struct Anchor
{
  Vec2 displacement{};
  std::size_t direction_slot{0};
  std::size_t speed_slot{0};
  double direction_offset{0.0};
  double speed_multiplier{1.0};
};

struct AnchorSet
{
  std::vector<Anchor> anchors;
  /// Radius the multipliers were applied to: max(current speed, min_radius).
  double radius{0.0};

  std::size_t size() const { return anchors.size(); }
  const Anchor & operator[](std::size_t k) const { return anchors[k]; }
};

AnchorSet build_anchor_set(double current_speed, const AnchorConfig & cfg);

/// argmin_k |a_k - gt|, lowest index on ties.
std::size_t closest_anchor(const AnchorSet & set, const Vec2 & gt_displacement);

/// Deterministic argmax over anchor scores. Exact ties go to the anchor
/// closest to "keep course": smallest |offset|, then multiplier nearest 1,
/// then lowest index.
std::size_t preferred_argmax(const AnchorSet & set, const std::vector<double> & scores);

/// Anchor indices ordered by descending score with the same tie rule.
std::vector<std::size_t> ranked_anchors(const AnchorSet & set, const std::vector<double> & scores);

}  // namespace anchorcast

#endif  // ANCHORCAST__ANCHORS_HPP_
