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

#ifndef ANCHORCAST__GAUSSIAN_HPP_
#define ANCHORCAST__GAUSSIAN_HPP_

#include "geometry.hpp"

namespace anchorcast
{

/// Lower bound applied to 1 - rho^2.
inline constexpr double kMinOneMinusRhoSq = 1e-6;

/// Negative log-density of a bivariate normal and its partials.
struct GaussianNll
{
  double nll{0.0};
  Vec2 d_mean{};
  Vec2 d_sigma{};
  double d_rho{0.0};
};

/// Throws kNumeric on sigma <= 0 or |rho| >= 1.
GaussianNll bivariate_nll(const Vec2 & y, const Vec2 & mean, const Vec2 & sigma, double rho);

/// log N(y | mean, diag(sigma) R(rho) diag(sigma)).
inline double bivariate_log_prob(const Vec2 & y, const Vec2 & mean, const Vec2 & sigma, double rho)
{
  return -bivariate_nll(y, mean, sigma, rho).nll;
}

}  // namespace anchorcast

#endif  // ANCHORCAST__GAUSSIAN_HPP_
