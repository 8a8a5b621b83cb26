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

#include "checkpoint.hpp"
#include "doctest.h"
#include "error.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

using namespace anchorcast;

namespace
{

ModelConfig small_config()
{
  ModelConfig cfg;
  cfg.embedding_dim = 4;
  cfg.pooling_dim = 5;
  cfg.hidden_dim = 3;
  return cfg;
}

std::string saved(const ModelParams & p)
{
  std::ostringstream out;
  save_checkpoint(p, out);
  return out.str();
}

ModelParams loaded(const std::string & bytes)
{
  std::istringstream in(bytes);
  return load_checkpoint(in, "mem");
}

}  // namespace

TEST_CASE("checkpoint round trip is bit exact")
{
  auto p = ModelParams::random(small_config(), 3);
  p.set_beta(BetaWeights::from(-2.0, -1.0, -1.5, 0.5, 1.0 / 3.0));
  p.flat()[7] = std::numeric_limits<double>::denorm_min();
  p.flat()[8] = -0.0;
  const std::string bytes = saved(p);
  const ModelParams q = loaded(bytes);
  REQUIRE(q.flat().size() == p.flat().size());
  CHECK(std::memcmp(q.flat().data(), p.flat().data(), p.flat().size() * sizeof(double)) == 0);
  CHECK(q.config().hidden_dim == 3);
  CHECK(q.layout().hash() == p.layout().hash());
  CHECK(saved(q) == bytes);
  CHECK(bytes.rfind("anchorcast-checkpoint 1\n", 0) == 0);
}

TEST_CASE("damaged checkpoints are rejected")
{
  const auto p = ModelParams::random(small_config(), 3);
  const std::string bytes = saved(p);
  CHECK_THROWS_AS(loaded(""), Error);
  CHECK_THROWS_AS(loaded("something else\n{}\n"), Error);
  CHECK_THROWS_AS(loaded(bytes.substr(0, bytes.size() - 3)), Error);
  CHECK_THROWS_AS(loaded(bytes + "x"), Error);
  {
    std::string nan_bytes = bytes;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::memcpy(nan_bytes.data() + nan_bytes.size() - 8, &nan, 8);
    CHECK_THROWS_AS(loaded(nan_bytes), Error);
  }
  {
    std::string tampered = bytes;
    const auto pos = tampered.find("\"layout_hash\":\"");
    REQUIRE(pos != std::string::npos);
    char & c = tampered[pos + 15];
    c = c == '0' ? '1' : '0';
    CHECK_THROWS_AS(loaded(tampered), Error);
  }
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/model.ckpt"), Error);
}

TEST_CASE("model config json")
{
  ModelConfig cfg = small_config();
  cfg.goal_conditioning = true;
  cfg.anchors.speed_multipliers = {0.7, 1.0, 1.3};
  const ModelConfig back = model_config_from_json(model_config_to_json(cfg));
  CHECK(back.goal_conditioning);
  CHECK(back.anchors.speed_multipliers == cfg.anchors.speed_multipliers);
  CHECK(ParamLayout(back).hash() == ParamLayout(cfg).hash());
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(back.anchors.direction_offsets[i] == doctest::Approx(cfg.anchors.direction_offsets[i]).epsilon(1e-15));
  }
}
