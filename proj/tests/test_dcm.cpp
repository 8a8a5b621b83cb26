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
#include "doctest.h"
#include "error.hpp"
#include "fixtures.hpp"

#include <cmath>
#include <limits>

using namespace anchorcast;

namespace
{

NormalizedState lone_primary(double speed)
{
  NormalizedState s;
  s.velocity = {speed, 0.0};
  s.speed = speed;
  return s;
}

NormalizedState with_neighbour(double speed, Vec2 pos, Vec2 vel, int id = 2)
{
  NormalizedState s = lone_primary(speed);
  s.neighbours.push_back({id, pos, vel});
  return s;
}

const AnchorConfig kAnchors{};
const FixedDcmParams kParams{};

}  // namespace

TEST_CASE("keep direction is the absolute offset")
{
  const AnchorSet set = build_anchor_set(0.4, kAnchors);
  const auto dir = keep_direction(set);
  const double expected[5] = {M_PI / 3, M_PI / 6, 0.0, M_PI / 6, M_PI / 3};
  for (std::size_t k = 0; k < 15; ++k) CHECK(dir[k] == doctest::Approx(expected[k % 5]).epsilon(1e-15));
  const auto f1 = compute_features(lone_primary(0.4), set, kParams);
  const auto f2 = compute_features(with_neighbour(0.4, {1, 0.2}, {-0.3, 0}), set, kParams);
  for (std::size_t k = 0; k < 15; ++k) CHECK(f1(k, kDir) == f2(k, kDir));
}

TEST_CASE("occupancy")
{
  const AnchorSet set = build_anchor_set(0.4, kAnchors);
  SUBCASE("no neighbours")
  {
    for (double v : occupancy(lone_primary(0.4), set, kParams)) CHECK(v == 0.0);
  }
  SUBCASE("neighbour on an anchor endpoint hits the distance floor")
  {
    const auto occ = occupancy(with_neighbour(0.4, set[8].displacement, {}), set, kParams);
    CHECK(occ[8] == doctest::Approx(5.0).epsilon(1e-12));
    // Same sector, other speeds: inverse distance between the endpoints.
    CHECK(occ[3] == doctest::Approx(1.0 / 0.2).epsilon(1e-12));
    CHECK(occ[13] == doctest::Approx(1.0 / 0.2).epsilon(1e-12));
    // Other sectors untouched.
    CHECK(occ[7] == 0.0);
  }
  SUBCASE("beyond the perception radius")
  {
    const auto occ = occupancy(with_neighbour(0.4, {kParams.perception_radius + 1.0, 0.0}, {}), set, kParams);
    for (double v : occ) CHECK(v == 0.0);
  }
  SUBCASE("outside every sector (behind)")
  {
    const auto occ = occupancy(with_neighbour(0.4, {-1.0, 0.0}, {}), set, kParams);
    for (double v : occ) CHECK(v == 0.0);
  }
}

TEST_CASE("collision avoidance")
{
  const AnchorSet set = build_anchor_set(0.4, kAnchors);
  SUBCASE("head-on neighbour")
  {
    const auto col = collision_avoidance(with_neighbour(0.4, {2, 0}, {-0.4, 0}), set, kParams);
    CHECK(col[7] == doctest::Approx(std::exp(-1.6)).epsilon(1e-12));
    CHECK(col[7] == doctest::Approx(0.2019).epsilon(1e-4));
    CHECK(col[2] == doctest::Approx(std::exp(-1.8)).epsilon(1e-12));
    CHECK(col[12] == doctest::Approx(std::exp(-1.4)).epsilon(1e-12));
  }
  SUBCASE("moving away")
  {
    for (double v : collision_avoidance(with_neighbour(0.4, {2, 0}, {0.4, 0}), set, kParams)) CHECK(v == 0.0);
  }
  SUBCASE("no neighbours")
  {
    for (double v : collision_avoidance(lone_primary(0.4), set, kParams)) CHECK(v == 0.0);
  }
}

TEST_CASE("leader follower")
{
  const AnchorSet set = build_anchor_set(0.4, kAnchors);
  SUBCASE("slower leader two metres ahead")
  {
    const auto lf = leader_follower(with_neighbour(0.4, {2, 0}, {0.2, 0}), set, kParams);
    // Only the straight deceleration anchor has the leader inside its 25 degree cone.
    CHECK(lf.decelerate[2] == doctest::Approx(0.1).epsilon(1e-12));
    for (std::size_t k = 0; k < 15; ++k) {
      CHECK(lf.accelerate[k] == 0.0);
      if (k != 2) CHECK(lf.decelerate[k] == 0.0);
    }
  }
  SUBCASE("faster leader only feeds acceleration anchors")
  {
    const auto lf = leader_follower(with_neighbour(0.4, {1.5, 0.3}, {0.7, 0.05}), set, kParams);
    double total = 0.0;
    for (std::size_t k = 0; k < 15; ++k) {
      CHECK(lf.decelerate[k] == 0.0);
      if (set[k].speed_multiplier <= 1.0) CHECK(lf.accelerate[k] == 0.0);
      total += lf.accelerate[k];
    }
    CHECK(total > 0.0);
  }
  SUBCASE("misaligned neighbour is no leader")
  {
    const auto lf = leader_follower(with_neighbour(0.4, {2, 0}, {0.0, 0.3}), set, kParams);
    for (std::size_t k = 0; k < 15; ++k) CHECK(lf.accelerate[k] + lf.decelerate[k] == 0.0);
  }
  SUBCASE("nearest leader wins, lower id on equal distance")
  {
    NormalizedState s = lone_primary(0.4);
    s.neighbours.push_back({3, {2.0, 0.1}, {0.1, 0}});
    s.neighbours.push_back({5, {2.0, -0.1}, {0.3, 0}});
    s.neighbours.push_back({7, {3.0, 0.0}, {0.9, 0}});
    const auto lf = leader_follower(s, set, kParams);
    const double d = std::hypot(2.0, 0.1);
    CHECK(lf.decelerate[2] == doctest::Approx(0.3 / d).epsilon(1e-12));
    CHECK(lf.accelerate[12] == 0.0);
  }
  SUBCASE("product of acc and dec is zero everywhere")
  {
    Rng rng(9);
    for (int i = 0; i < 500; ++i) {
      NormalizedState s = lone_primary(rng.uniform(0, 0.8));
      for (int j = 0; j < 4; ++j) {
        s.neighbours.push_back({j + 2, {rng.uniform(-1, 5), rng.uniform(-3, 3)}, {rng.uniform(-0.5, 0.9), rng.uniform(-0.3, 0.3)}});
      }
      const auto f = compute_features(s, build_anchor_set(s.speed, kAnchors), kParams);
      for (const auto & row : f.rows) {
        CHECK(row[kAcc] * row[kDec] == 0.0);
        CHECK(row[kOcc] >= 0.0);
        CHECK(row[kCol] >= 0.0);
        CHECK(row[kAcc] >= 0.0);
        CHECK(row[kDec] >= 0.0);
      }
    }
  }
}

TEST_CASE("utility matches a term-by-term dot product")
{
  Rng rng(13);
  DcmFeatures zero;
  zero.rows.assign(15, {});
  for (double u : utility(zero, BetaWeights::from(1, 2, 3, 4, 5))) CHECK(u == 0.0);

  const AnchorSet set = build_anchor_set(0.4, kAnchors);
  const auto dir_only = utility(compute_features(lone_primary(0.4), set, kParams), BetaWeights::from(-1, 0, 0, 0, 0));
  for (std::size_t k = 0; k < 15; ++k) CHECK(dir_only[k] == doctest::Approx(-std::abs(set[k].direction_offset)));

  for (int trial = 0; trial < 100; ++trial) {
    DcmFeatures f;
    f.rows.resize(15);
    for (auto & row : f.rows) {
      for (auto & v : row) v = rng.uniform(-3, 3);
    }
    const BetaWeights b = BetaWeights::from(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const auto u = utility(f, b);
    for (std::size_t k = 0; k < 15; ++k) {
      const double oracle = b[0] * f.rows[k][0] + b[1] * f.rows[k][1] + b[2] * f.rows[k][2] + b[3] * f.rows[k][3] +
                            b[4] * f.rows[k][4];
      CHECK(std::abs(u[k] - oracle) <= 1e-12);
    }
  }
}

TEST_CASE("multinomial logit probabilities")
{
  auto p = mnl_probabilities({0, 0, 0});
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  p = mnl_probabilities({std::log(2.0), 0, 0});
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-15));
  const std::vector<double> s{0.3, -1.2, 2.5, 0.0};
  std::vector<double> shifted = s;
  for (double & v : shifted) v += 1000.0;
  const auto a = mnl_probabilities(s);
  const auto b = mnl_probabilities(shifted);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
  CHECK_THROWS_AS(mnl_probabilities({0.0, std::nan("")}), Error);
  // Extreme spreads still give full support and a unit sum.
  const auto e = mnl_probabilities({700.0, -700.0, 0.0});
  double sum = 0.0;
  for (double v : e) sum += v;
  CHECK(std::abs(sum - 1.0) <= 1e-12);
}

TEST_CASE("explain report")
{
  const AnchorSet set = build_anchor_set(0.4, kAnchors);
  SUBCASE("zero beta and logits")
  {
    const std::vector<double> zeros(15, 0.0);
    const auto r = explain(with_neighbour(0.4, {1, 0}, {-0.4, 0}), set, BetaWeights{}, zeros, zeros, kParams);
    for (double p : r.probability) CHECK(p == doctest::Approx(1.0 / 15.0));
    for (const auto & m : r.maps()) {
      for (double v : m.values) CHECK(v == 0.0);
    }
  }
  SUBCASE("dcm only: total equals utility")
  {
    const std::vector<double> zeros(15, 0.0);
    const auto r = explain(with_neighbour(0.4, {1, 0.2}, {-0.4, 0}), set, BetaWeights::from(-2, -1, -1.5, 0.5, 0.5),
                           zeros, zeros, kParams);
    for (std::size_t k = 0; k < 15; ++k) CHECK(r.score[k] == r.utility[k]);
  }
  SUBCASE("seven maps and additivity")
  {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
      NormalizedState s = lone_primary(rng.uniform(0, 0.8));
      for (int j = 0; j < 3; ++j) {
        s.neighbours.push_back({j + 2, {rng.uniform(-1, 4), rng.uniform(-2, 2)}, {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)}});
      }
      std::vector<double> h(15), p(15);
      for (auto & v : h) v = rng.uniform(-2, 2);
      for (auto & v : p) v = rng.uniform(-2, 2);
      const auto r = explain(s, build_anchor_set(s.speed, kAnchors), BetaWeights::from(-2, -1, -1.5, 0.5, 0.5), h, p, kParams);
      const auto maps = r.maps();
      REQUIRE(maps.size() == 7);
      CHECK(maps[0].name == "combined");
      for (std::size_t k = 0; k < 15; ++k) {
        const double parts = maps[1].values[k] + maps[3].values[k] + maps[4].values[k] + maps[5].values[k] + maps[6].values[k];
        CHECK(std::abs(parts - maps[0].values[k]) <= 1e-9);
        CHECK(std::abs(maps[1].values[k] + maps[2].values[k] - maps[0].values[k]) <= 1e-9);
      }
    }
  }
}

TEST_CASE("features are invariant under rigid motion of the scene")
{
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const Scene s = fixtures::random_scene(rng, 5);
    const Scene moved = fixtures::transformed(s, rng.uniform(-M_PI, M_PI), {rng.uniform(-50, 50), rng.uniform(-50, 50)});
    const int t = 1 + static_cast<int>(rng.below(19));
    const auto a = normalize_scene_at(s, 0, t);
    const auto b = normalize_scene_at(moved, 0, t);
    const auto fa = compute_features(a, build_anchor_set(a.speed, kAnchors), kParams);
    const auto fb = compute_features(b, build_anchor_set(b.speed, kAnchors), kParams);
    for (std::size_t k = 0; k < 15; ++k) {
      for (std::size_t j = 0; j < kNumFeatures; ++j) CHECK(std::abs(fa.rows[k][j] - fb.rows[k][j]) <= 1e-9);
    }
  }
}

TEST_CASE("occupancy falls with distance along a bearing beyond the anchor ring")
{
  const AnchorSet set = build_anchor_set(0.4, kAnchors);
  double ring = 0.0;
  for (const auto & a : set.anchors) ring = std::max(ring, a.displacement.norm());
  for (double bearing : {-1.2, -0.5, 0.0, 0.3, 1.0}) {
    std::vector<double> prev(15, std::numeric_limits<double>::infinity());
    for (double r = ring; r <= kParams.perception_radius + 0.5; r += 0.01) {
      const auto occ = occupancy(with_neighbour(0.4, Vec2{std::cos(bearing), std::sin(bearing)} * r, {}), set, kParams);
      for (std::size_t k = 0; k < 15; ++k) {
        CHECK(occ[k] <= prev[k] + 1e-12);
        prev[k] = occ[k];
      }
    }
  }
}

TEST_CASE("collision term falls with distance for a neighbour aimed along the anchor ray")
{
  const AnchorSet set = build_anchor_set(0.4, kAnchors);
  for (std::size_t k = 0; k < 15; ++k) {
    const Vec2 c = set[k].displacement;
    const Vec2 u = c / c.norm();
    double prev = std::numeric_limits<double>::infinity();
    for (double r = c.norm() + 0.05; r <= kParams.perception_radius; r += 0.01) {
      const Vec2 p = u * r;
      const auto col = collision_avoidance(with_neighbour(0.4, p, (c - p) * 0.2), set, kParams);
      CHECK(col[k] > 0.0);
      CHECK(col[k] <= prev + 1e-12);
      prev = col[k];
    }
  }
}

TEST_CASE("argmax is unchanged by a constant shift")
{
  Rng rng(41);
  const AnchorSet set = build_anchor_set(0.4, kAnchors);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> s(15);
    for (auto & v : s) v = rng.uniform(-5, 5);
    std::vector<double> t = s;
    const double c = rng.uniform(-100, 100);
    for (auto & v : t) v += c;
    CHECK(preferred_argmax(set, s) == preferred_argmax(set, t));
  }
}
