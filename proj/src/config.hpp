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

#ifndef ANCHORCAST__CONFIG_HPP_
#define ANCHORCAST__CONFIG_HPP_

#include "evaluation.hpp"
#include "geometry.hpp"
#include "neural.hpp"
#include "simulate.hpp"
#include "training.hpp"

#include <string>

namespace anchorcast
{

struct PathsConfig
{
  std::string data;
  std::string checkpoint;
  std::string output;
};

/// Everything a command needs, loadable from one JSON document. Angles are
/// written in degrees in the file and held in radians here.
struct RunConfig
{
  std::size_t threads{1};
  Horizon horizon{};
  ModelConfig model{};
  TrainConfig train{};
  SimConfig sim{};
  EvalConfig eval{};
  PathsConfig paths{};
};

void validate(const RunConfig & cfg);

/// Missing keys keep their defaults; unknown keys are rejected by path
/// (e.g. "train.lr").
RunConfig parse_config(const std::string & json_text);
RunConfig load_config(const std::string & path);

/// Full config as a JSON document (every key, defaults included).
std::string config_to_json(const RunConfig & cfg, int indent = -1);

}  // namespace anchorcast

#endif  // ANCHORCAST__CONFIG_HPP_
