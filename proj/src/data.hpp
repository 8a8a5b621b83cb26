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

#ifndef ANCHORCAST__DATA_HPP_
#define ANCHORCAST__DATA_HPP_

#include "dcm.hpp"
#include "geometry.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace anchorcast
{

// Newline-delimited records, one JSON object per line:
//   {"scene": {"id": 0, "p": 3, "s": 0, "e": 20}}
//   {"track": {"f": 0, "p": 3, "x": 1.250000, "y": -0.500000}}
// Tracks are global; a scene covers every track inside its frame range.

std::vector<Scene> parse_scenes(std::istream & in, const std::string & source = "<stream>");
/// Also loads the goals sidecar when present.
std::vector<Scene> read_scenes(const std::string & path);

/// Ordered by scene id, then frame, then pedestrian id; 6 decimals.
void write_scenes(std::span<const Scene> scenes, std::ostream & out);
/// Writes the goals sidecar too when any scene carries goals.
void write_scenes(std::span<const Scene> scenes, const std::string & path);

/// "runs/data.ndjson" + "goals" -> "runs/data.goals.ndjson".
std::string sidecar_path(const std::string & data_path, const std::string & tag, const std::string & ext = ".ndjson");

void write_goals(std::span<const Scene> scenes, const std::string & path);
/// Attaches goals from `path` to the matching scenes.
void read_goals(std::vector<Scene> & scenes, const std::string & path);

/// One logged decision of a simulated choice-making agent.
struct ChoiceRecord
{
  std::int64_t scene_id{0};
  int pedestrian_id{0};
  int step{0};
  std::size_t chosen{0};
  std::vector<std::array<double, kNumFeatures>> features;
};

void write_choices(std::span<const ChoiceRecord> records, const std::string & path);
std::vector<ChoiceRecord> read_choices(const std::string & path);

}  // namespace anchorcast

#endif  // ANCHORCAST__DATA_HPP_
