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

#ifndef ANCHORCAST__GRADCHECK_HPP_
#define ANCHORCAST__GRADCHECK_HPP_

#include "neural.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace anchorcast
{

struct GradcheckConfig
{
  std::size_t slices_per_group{10};
  std::size_t slice_size{10};
  double step{1e-5};
  double threshold{1e-4};
  /// Denominator floor of the relative error. Round-off in a loss of a few
  /// hundred nats puts ~3e-9 of noise on every central difference, so
  /// entries below the floor (dead rectifiers give exact zeros) are compared
  /// on an absolute scale of floor * threshold = 1e-8.
  double floor{1e-4};
  std::uint64_t seed{1};
};

struct GroupCheck
{
  ParamGroup group{ParamGroup::kEmbedding};
  std::size_t checked{0};
  double max_rel_error{0.0};
  std::size_t worst_index{0};  // flat index of the worst entry
  double worst_analytic{0.0};
  double worst_numeric{0.0};
};

struct GradcheckReport
{
  std::array<GroupCheck, kNumParamGroups> groups{};
  double max_rel_error{0.0};
  bool passed{false};
};

/// Applied to the analytic gradient before comparison. Test fixtures use it
/// to simulate a broken backward pass.
using GradientHook = std::function<void(std::vector<double> &)>;

/// Central differences on random slices of every parameter group.
GradcheckReport gradcheck(
  const ModelParams & params, std::span<const Sequence * const> batch, const GradcheckConfig & cfg,
  const GradientHook & corrupt = {});

/// The small fixture scene used by the command-line check: a few crossing
/// walkers with the default horizon.
Scene gradcheck_scene(const Horizon & horizon, std::uint64_t seed);

}  // namespace anchorcast

#endif  // ANCHORCAST__GRADCHECK_HPP_
