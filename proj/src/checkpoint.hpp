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

#ifndef ANCHORCAST__CHECKPOINT_HPP_
#define ANCHORCAST__CHECKPOINT_HPP_

#include "neural.hpp"

#include <iosfwd>
#include <string>

namespace anchorcast
{

// Layout on disk:
//   line 1  "anchorcast-checkpoint 1"
//   line 2  one JSON object: model config echo, layout manifest, layout hash, count, beta
//   rest    count IEEE-754 doubles, little-endian
void save_checkpoint(const ModelParams & params, std::ostream & out);
void save_checkpoint(const ModelParams & params, const std::string & path);

/// Rebuilds the model from the config echo and rejects files whose layout
/// hash or size does not match.
ModelParams load_checkpoint(std::istream & in, const std::string & source = "<stream>");
ModelParams load_checkpoint(const std::string & path);

/// Model-related config sections ("anchors", "dcm", "model") as JSON.
std::string model_config_to_json(const ModelConfig & cfg);
ModelConfig model_config_from_json(const std::string & json_text);

}  // namespace anchorcast

#endif  // ANCHORCAST__CHECKPOINT_HPP_
