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
#include "doctest.h"
#include "error.hpp"
#include "rng.hpp"

#include <algorithm>
#include <limits>

using namespace anchorcast;

namespace
{

// Exhaustive reference: plain loop, strict < keeps the first minimum.
std::size_t brute_closest(const AnchorSet & set, const Vec2 & gt)
{
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < set.size(); ++k) {
    const double dx = set[k].displacement.x - gt.x;
    const double dy = set[k].displacement.y - gt.y;
    const double d = std::sqrt(dx * dx + dy * dy);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("default grid has 15 anchors")
{
  const AnchorConfig cfg;
  CHECK(cfg.size() == 15);
  const AnchorSet set = build_anchor_set(0.4, cfg);
  CHECK(set.size() == 15);
}

TEST_CASE("anchor geometry")
{
  const AnchorConfig cfg;
  const AnchorSet set = build_anchor_set(0.4, cfg);
  // Speed row 1 (m = 1), direction column 2 (offset 0).
  CHECK(set[7].displacement.x == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(set[7].displacement.y == 0.0);
  CHECK(set[7].speed_multiplier == 1.0);
  CHECK(set[7].direction_offset == 0.0);
  // Speed row 2 (m = 1.5), offset 0.
  CHECK(set[12].displacement.x == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(set[12].displacement.y == 0.0);
  for (std::size_t k = 0; k < set.size(); ++k) {
    const double r = 0.4 * set[k].speed_multiplier;
    CHECK(set[k].displacement.x == doctest::Approx(r * std::cos(set[k].direction_offset)));
    CHECK(set[k].displacement.y == doctest::Approx(r * std::sin(set[k].direction_offset)));
    CHECK(set[k].speed_slot == k / 5);
    CHECK(set[k].direction_slot == k % 5);
  }
}

TEST_CASE("slow pedestrians keep a small ring of anchors")
{
  const AnchorConfig cfg;
  const AnchorSet set = build_anchor_set(0.0, cfg);
  CHECK(set.radius == cfg.min_radius);
  CHECK(set[7].displacement.x == doctest::Approx(0.04));
}

TEST_CASE("closest anchor examples")
{
  const AnchorConfig cfg;
  const AnchorSet set = build_anchor_set(0.4, cfg);
  CHECK(closest_anchor(set, set[7].displacement) == 7);
  CHECK(closest_anchor(set, {0.41, 0.01}) == brute_closest(set, {0.41, 0.01}));
  CHECK(closest_anchor(set, {0.41, 0.01}) == 7);
  // Midpoint of anchors 7 and 12 is equidistant; the lower index wins.
  const Vec2 mid = (set[7].displacement + set[12].displacement) * 0.5;
  CHECK(closest_anchor(set, mid) == 7);
}

TEST_CASE("closest anchor equals the exhaustive minimum")
{
  const AnchorConfig cfg;
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const AnchorSet set = build_anchor_set(rng.uniform(0.0, 1.0), cfg);
    const Vec2 gt{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
    REQUIRE(closest_anchor(set, gt) == brute_closest(set, gt));
  }
}

TEST_CASE("mirror symmetry and linear scaling")
{
  AnchorConfig cfg;
  AnchorConfig mirrored = cfg;
  for (auto & o : mirrored.direction_offsets) o = -o;
  std::reverse(mirrored.direction_offsets.begin(), mirrored.direction_offsets.end());
  const AnchorSet a = build_anchor_set(0.5, cfg);
  const AnchorSet b = build_anchor_set(0.5, mirrored);
  for (std::size_t k = 0; k < a.size(); ++k) {
    const std::size_t m = (k / 5) * 5 + (4 - k % 5);
    CHECK(b[m].displacement.x == doctest::Approx(a[k].displacement.x));
    CHECK(b[m].displacement.y == doctest::Approx(-a[k].displacement.y));
  }
  const AnchorSet c = build_anchor_set(1.0, cfg);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(c[k].displacement.x == doctest::Approx(2.0 * a[k].displacement.x));
    CHECK(c[k].displacement.y == doctest::Approx(2.0 * a[k].displacement.y));
  }
}

TEST_CASE("preferred argmax breaks exact ties towards keeping course")
{
  const AnchorConfig cfg;
  const AnchorSet set = build_anchor_set(0.4, cfg);
  std::vector<double> flat(15, 0.0);
  CHECK(preferred_argmax(set, flat) == 7);
  const auto ranked = ranked_anchors(set, flat);
  CHECK(ranked[0] == 7);
  // Then offset 0 at the other speeds, slower first by index.
  CHECK(ranked[1] == 2);
  CHECK(ranked[2] == 12);
  std::vector<double> s(15, 0.0);
  s[3] = 1.0;
  CHECK(preferred_argmax(set, s) == 3);
  const auto r2 = ranked_anchors(set, s);
  CHECK(r2[0] == 3);
  for (std::size_t i = 1; i < r2.size(); ++i) CHECK(s[r2[i - 1]] >= s[r2[i]]);
}

TEST_CASE("config validation")
{
  AnchorConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  AnchorConfig asym = cfg;
  asym.direction_offsets = {-0.5, 0.0, 0.4};
  CHECK_THROWS_AS(validate(asym), Error);
  AnchorConfig unsorted = cfg;
  unsorted.speed_multipliers = {1.0, 0.5};
  CHECK_THROWS_AS(validate(unsorted), Error);
  AnchorConfig radius = cfg;
  radius.min_radius = 0.0;
  CHECK_THROWS_AS(validate(radius), Error);
  AnchorConfig empty = cfg;
  empty.speed_multipliers.clear();
  CHECK_THROWS_AS(validate(empty), Error);
}
