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

#include "gradcheck.hpp"

#include "rng.hpp"
#include "simulate.hpp"

#include <algorithm>
#include <cmath>

namespace anchorcast
{

GradcheckReport gradcheck(
  const ModelParams & params, std::span<const Sequence * const> batch, const GradcheckConfig & cfg,
  const GradientHook & corrupt)
{
  std::vector<double> analytic(params.flat().size(), 0.0);
  loss_and_gradient(params, batch, &analytic);
  if (corrupt) corrupt(analytic);

  ModelParams probe = params;
  auto & flat = probe.flat();
  const auto loss_at = [&](std::size_t i, double value) {
    const double saved = flat[i];
    flat[i] = value;
    const double l = loss_and_gradient(probe, batch, nullptr).loss;
    flat[i] = saved;
    return l;
  };

  GradcheckReport report;
  Rng rng(cfg.seed);
  for (std::size_t g = 0; g < kNumParamGroups; ++g) {
    auto & check = report.groups[g];
    check.group = static_cast<ParamGroup>(g);
    std::vector<std::size_t> indices;
    for (const auto & b : params.layout().blocks()) {
      if (b.group != check.group) continue;
      for (std::size_t i = 0; i < b.size(); ++i) indices.push_back(b.offset + i);
    }
    if (indices.empty()) continue;
    for (std::size_t s = 0; s < cfg.slices_per_group; ++s) {
      // A slice is a run of consecutive entries starting at a random position.
      const std::size_t len = std::min(cfg.slice_size, indices.size());
      const std::size_t start = static_cast<std::size_t>(rng.below(indices.size() - len + 1));
      for (std::size_t j = start; j < start + len; ++j) {
        const std::size_t i = indices[j];
        const double x = params.flat()[i];
        const double numeric = (loss_at(i, x + cfg.step) - loss_at(i, x - cfg.step)) / (2.0 * cfg.step);
        const double a = analytic[i];
        const double denom = std::max({std::abs(a), std::abs(numeric), cfg.floor});
        const double rel = std::abs(a - numeric) / denom;
        ++check.checked;
        if (!(rel <= check.max_rel_error)) {
          check.max_rel_error = rel;
          check.worst_index = i;
          check.worst_analytic = a;
          check.worst_numeric = numeric;
        }
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
  }
  report.passed = report.max_rel_error < cfg.threshold;
  return report;
}

Scene gradcheck_scene(const Horizon & horizon, std::uint64_t seed)
{
  SimConfig sim;
  sim.n_scenes = 1;
  sim.min_pedestrians = 4;
  sim.max_pedestrians = 4;
  sim.arena_radius = 2.5;
  sim.seed = seed;
  return generate_social_force(sim, horizon).front();
}

}  // namespace anchorcast
