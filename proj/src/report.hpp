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

#ifndef ANCHORCAST__REPORT_HPP_
#define ANCHORCAST__REPORT_HPP_

#include "anchors.hpp"
#include "dcm.hpp"
#include "evaluation.hpp"
#include "training.hpp"

#include <cstdint>
#include <span>
#include <string>

namespace anchorcast
{

struct ExplainContext
{
  std::int64_t scene_id{0};
  int pedestrian_id{0};
  int step{0};
};

/// JSON document: anchors, features, the seven named maps and pi.
std::string explain_to_json(const InterpretabilityReport & report, const AnchorSet & anchors, const ExplainContext & ctx);

/// One heat grid per map plus one for pi. Rows are speed levels, columns
/// direction offsets; colours run green (low) to red (high) within a panel.
std::string explain_to_svg(const InterpretabilityReport & report, const AnchorSet & anchors, const ExplainContext & ctx);

std::string metrics_csv(std::span<const MetricsReport> reports);
std::string per_scene_csv(const MetricsReport & report);
/// Aligned columns: model, ADE/FDE, Col-I, Top-k ADE/FDE.
std::string metrics_table(std::span<const MetricsReport> reports);

std::string train_log_csv(const TrainLog & log);

/// Estimates with standard errors and z statistics.
std::string mnl_fit_table(const MnlFit & fit);

}  // namespace anchorcast

#endif  // ANCHORCAST__REPORT_HPP_
