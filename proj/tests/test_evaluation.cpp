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

#include "doctest.h"
#include "error.hpp"
#include "evaluation.hpp"
#include "fixtures.hpp"
#include "simulate.hpp"

#include <cmath>
#include <limits>

using namespace anchorcast;

namespace
{

ModelConfig small_config()
{
  ModelConfig cfg;
  cfg.embedding_dim = 6;
  cfg.pooling_dim = 7;
  cfg.hidden_dim = 5;
  return cfg;
}

// Brute-force minimum over 64 interpolation points per step, neighbours
// counted only while present at both ends of a step.
double dense_min_distance(const Scene & s, const Horizon & h)
{
  const auto & me = s.primary();
  double best = std::numeric_limits<double>::infinity();
  for (const auto & other : s.trajectories) {
    if (other.pedestrian_id == me.pedestrian_id) continue;
    for (int t = h.t_obs; t < h.t_pred; ++t) {
      if (!other.present(t)) continue;
      best = std::min(best, (me.at(t) - other.at(t)).norm());
      if (t + 1 >= h.t_pred || !other.present(t + 1)) continue;
      for (int i = 1; i < 64; ++i) {
        const double f = i / 64.0;
        const Vec2 a = me.at(t) * (1 - f) + me.at(t + 1) * f;
        const Vec2 b = other.at(t) * (1 - f) + other.at(t + 1) * f;
        best = std::min(best, (a - b).norm());
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("displacement errors on hand-computed fixtures")
{
  std::vector<Vec2> gt;
  for (int i = 0; i < 12; ++i) gt.push_back({0.4 * i, 0.1 * i});
  CHECK(ade(gt, gt) == 0.0);
  CHECK(fde(gt, gt) == 0.0);
  std::vector<Vec2> shifted = gt;
  for (auto & p : shifted) p += Vec2{0.3, 0.4};
  CHECK(std::abs(ade(shifted, gt) - 0.5) <= 1e-12);
  CHECK(std::abs(fde(shifted, gt) - 0.5) <= 1e-12);
  std::vector<Vec2> last = gt;
  last.back() += Vec2{1.2, -0.5};
  CHECK(std::abs(fde(last, gt) - 1.3) <= 1e-12);
  CHECK(std::abs(ade(last, gt) - 1.3 / 12.0) <= 1e-12);
  CHECK_THROWS_AS(ade(std::span<const Vec2>(gt).first(5), gt), Error);
  CHECK_THROWS_AS(fde(std::span<const Vec2>(gt).first(5), gt), Error);

  SUBCASE("invariant under a rigid motion of both")
  {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
      std::vector<Vec2> a, b;
      for (int t = 0; t < 12; ++t) {
        a.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5)});
        b.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5)});
      }
      const double ang = rng.uniform(-M_PI, M_PI);
      const Vec2 shift{rng.uniform(-100, 100), rng.uniform(-100, 100)};
      std::vector<Vec2> ra, rb;
      for (int t = 0; t < 12; ++t) {
        ra.push_back(rotate(a[t], ang) + shift);
        rb.push_back(rotate(b[t], ang) + shift);
      }
      CHECK(std::abs(ade(ra, rb) - ade(a, b)) <= 1e-9);
      CHECK(std::abs(fde(ra, rb) - fde(a, b)) <= 1e-9);
    }
  }
}

TEST_CASE("collision flag agrees with a dense interpolation oracle")
{
  const Horizon h;
  const EvalConfig cfg;
  struct Fixture
  {
    const char * name;
    Scene scene;
    bool expected;
  };
  std::vector<Fixture> fixtures_list;
  fixtures_list.push_back({"parallel walkers 1 m apart",
                           fixtures::make_scene({fixtures::line({0, 0}, {0.4, 0}), fixtures::line({0, 1}, {0.4, 0})}),
                           false});
  fixtures_list.push_back({"same point at the same step",
                           fixtures::make_scene({fixtures::line({-6, 0}, {0.4, 0}), fixtures::line({0, -6}, {0, 0.4})}),
                           true});
  fixtures_list.push_back({"crossing halfway between steps",
                           fixtures::make_scene({fixtures::line({-6.2, 0}, {0.4, 0}), fixtures::line({0, -6.2}, {0, 0.4})}),
                           true});
  fixtures_list.push_back({"near miss at 0.25 m",
                           fixtures::make_scene({fixtures::line({-6, 0}, {0.4, 0}), fixtures::line({6, 0.25}, {-0.4, 0})}),
                           false});
  fixtures_list.push_back({"head on",
                           fixtures::make_scene({fixtures::line({-6, 0}, {0.4, 0}), fixtures::line({6, 0.1}, {-0.4, 0})}),
                           true});
  fixtures_list.push_back({"contact only during observation",
                           fixtures::make_scene({fixtures::line({-2, 0}, {0.4, 0}), fixtures::line({2, 0}, {-0.4, 0})}),
                           false});
  {
    // Neighbour leaves before the crossing.
    Scene s = fixtures::make_scene({fixtures::line({-6, 0}, {0.4, 0}), fixtures::line({0, -6}, {0, 0.4})});
    for (int t = 13; t < 21; ++t) s.trajectories[1].positions[t].reset();
    fixtures_list.push_back({"neighbour gone before the crossing", s, false});
  }
  fixtures_list.push_back({"lone primary", fixtures::make_scene({fixtures::line({0, 0}, {0.4, 0})}), false});

  std::vector<Scene> all;
  double flagged = 0;
  for (const auto & f : fixtures_list) {
    CAPTURE(f.name);
    const double oracle = dense_min_distance(f.scene, h);
    CHECK(collides(f.scene, h, cfg) == f.expected);
    CHECK((oracle < cfg.collision_threshold) == f.expected);
    if (std::isfinite(oracle)) CHECK(min_primary_distance(f.scene, h, 4) >= oracle - 1e-9);
    all.push_back(f.scene);
    flagged += f.expected ? 1 : 0;
  }
  CHECK(col_i(all, h, cfg) == doctest::Approx(100.0 * flagged / static_cast<double>(all.size())));
  CHECK(col_i(std::vector<Scene>{}, h, cfg) == 0.0);
}

TEST_CASE("rollout of a zero model keeps a straight walker on course")
{
  const Horizon h;
  const EvalConfig cfg;
  const ModelParams zero(small_config());
  const Scene s = fixtures::make_scene({fixtures::line({1, 2}, {0.3, 0.2})});
  const Scene pred = rollout(zero, s, h, cfg);
  const auto future = primary_future(pred, h);
  REQUIRE(future.size() == 12);
  for (int i = 0; i < 12; ++i) {
    const Vec2 expected = Vec2{1, 2} + Vec2{0.3, 0.2} * static_cast<double>(h.t_obs + i);
    CHECK((future[static_cast<std::size_t>(i)] - expected).norm() <= 1e-9);
  }
  // Observed steps are untouched.
  for (int t = 0; t < h.t_obs; ++t) CHECK(pred.primary().at(t).x == s.primary().at(t).x);
}

TEST_CASE("rollout is equivariant under rigid motion")
{
  const Horizon h;
  const EvalConfig cfg;
  auto params = ModelParams::random(small_config(), 5);
  params.set_beta(BetaWeights::from(-1.0, -0.5, -0.7, 0.3, 0.2));
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Scene s = fixtures::random_scene(rng, 4);
    const double ang = rng.uniform(-M_PI, M_PI);
    const Vec2 shift{rng.uniform(-30, 30), rng.uniform(-30, 30)};
    const Scene a = rollout(params, s, h, cfg);
    const Scene b = rollout(params, fixtures::transformed(s, ang, shift), h, cfg);
    for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
      for (int t = 0; t < h.t_pred; ++t) {
        if (!a.trajectories[i].present(t)) continue;
        const Vec2 expect = rotate(a.trajectories[i].at(t), ang) + shift;
        CHECK((b.trajectories[i].at(t) - expect).norm() <= 1e-6);
      }
    }
  }
}

TEST_CASE("top-k rollouts")
{
  const Horizon h;
  const EvalConfig cfg;
  auto params = ModelParams::random(small_config(), 9);
  params.set_beta(BetaWeights::from(-1.0, -0.5, -0.7, 0.3, 0.2));
  Rng rng(11);
  const Scene s = fixtures::random_scene(rng, 3);
  const auto one = topk_rollout(params, s, h, cfg, 1);
  REQUIRE(one.size() == 1);
  const auto greedy = primary_future(rollout(params, s, h, cfg), h);
  CHECK(primary_future(one[0], h) == greedy);

  StepOutput first;
  rollout(params, s, h, cfg, std::nullopt, &first);
  const auto modes = topk_rollout(params, s, h, cfg, 3);
  REQUIRE(modes.size() == 3);
  CHECK(primary_future(modes[0], h) == greedy);
  const Vec2 last_obs = s.primary().at(h.t_obs - 1);
  const AnchorSet anchors = build_anchor_set((last_obs - s.primary().at(h.t_obs - 2)).norm(), params.config().anchors);
  std::vector<double> first_scores;
  for (std::size_t j = 0; j < 3; ++j) {
    const Vec2 step = modes[j].primary().at(h.t_obs) - last_obs;
    for (std::size_t i = 0; i < j; ++i) CHECK((step - (modes[i].primary().at(h.t_obs) - last_obs)).norm() > 1e-9);
  }
  const auto ranked = ranked_anchors(anchors, first.score);
  CHECK(first.score[ranked[0]] >= first.score[ranked[1]]);
  CHECK(first.score[ranked[1]] >= first.score[ranked[2]]);
  CHECK_THROWS_AS(topk_rollout(params, s, h, cfg, 0), Error);
  CHECK_THROWS_AS(topk_rollout(params, s, h, cfg, 16), Error);
}

TEST_CASE("evaluation reports")
{
  const Horizon h;
  EvalConfig cfg;
  SimConfig sim;
  sim.n_scenes = 12;
  const auto data = generate_social_force(sim, h);

  SUBCASE("ground truth scores zero")
  {
    const auto r = evaluate(GroundTruthPredictor{}, data, h, cfg);
    CHECK(r.ade == 0.0);
    CHECK(r.fde == 0.0);
    CHECK(r.top_ade == 0.0);
    CHECK(r.n_scenes == data.size());
  }
  SUBCASE("top-3 never worse than greedy; threads change nothing")
  {
    auto params = ModelParams::random(small_config(), 13);
    const ModelPredictor model(params);
    const auto one = evaluate(model, data, h, cfg, 1);
    const auto three = evaluate(model, data, h, cfg, 3);
    for (std::size_t i = 0; i < one.scenes.size(); ++i) {
      CHECK(one.scenes[i].top_ade <= one.scenes[i].ade + 1e-12);
      CHECK(one.scenes[i].ade == three.scenes[i].ade);
      CHECK(one.scenes[i].collision == three.scenes[i].collision);
    }
    CHECK(one.ade == three.ade);
    CHECK(one.col_i == three.col_i);
    CHECK(one.top_ade <= one.ade + 1e-12);
  }
  SUBCASE("constant velocity on head-on scenes collides")
  {
    std::vector<Scene> head_on;
    for (int i = 0; i < 5; ++i) {
      // Two walkers that veer apart late; extrapolating their approach meets mid-way.
      std::vector<Vec2> a = fixtures::line({-4, 0}, {0.4, 0}), b = fixtures::line({4, 0.05}, {-0.4, 0});
      for (int t = h.t_obs; t < 21; ++t) {
        a[t].y -= 0.1 * (t - h.t_obs + 1);
        b[t].y += 0.1 * (t - h.t_obs + 1);
      }
      head_on.push_back(fixtures::make_scene({a, b}, i));
    }
    const auto r = evaluate(ConstantVelocityPredictor{}, head_on, h, cfg);
    CHECK(r.col_i > 0.0);
    const auto gt = evaluate(GroundTruthPredictor{}, head_on, h, cfg);
    CHECK(gt.col_i == 0.0);
  }
  SUBCASE("constant velocity continues the last observed step")
  {
    const Scene s = fixtures::make_scene({fixtures::line({0, 0}, {0.2, -0.1})});
    const Scene p = constant_velocity(s, h, cfg);
    for (int t = h.t_obs; t < h.t_pred; ++t) CHECK((p.primary().at(t) - s.primary().at(t)).norm() <= 1e-12);
  }
  SUBCASE("empty dataset")
  {
    CHECK_THROWS_AS(evaluate(GroundTruthPredictor{}, std::span<const Scene>(), h, cfg), Error);
  }
}
