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

#include "report.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace anchorcast
{

using nlohmann::json;

namespace
{

constexpr const char * kFeatureNames[kNumFeatures] = {"keep_direction", "occupancy", "collision", "leader_accelerate",
                                                      "leader_decelerate"};

std::string fmt(const char * spec, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string heat_colour(double v, double lo, double hi)
{
  const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
  // green (low) -> yellow -> red (high)
  const int r = static_cast<int>(std::lround(255.0 * std::min(1.0, 2.0 * t)));
  const int g = static_cast<int>(std::lround(255.0 * std::min(1.0, 2.0 * (1.0 - t))));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x40", r, g);
  return buf;
}

}  // namespace

std::string explain_to_json(const InterpretabilityReport & report, const AnchorSet & anchors, const ExplainContext & ctx)
{
  json anchor_list = json::array();
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    const auto & a = anchors[k];
    anchor_list.push_back(
      {{"index", k},
       {"dx", a.displacement.x},
       {"dy", a.displacement.y},
       {"direction_deg", a.direction_offset * 180.0 / M_PI},
       {"speed_multiplier", a.speed_multiplier}});
  }
  json features = json::object();
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    std::vector<double> col;
    for (const auto & row : report.features.rows) col.push_back(row[f]);
    features[kFeatureNames[f]] = col;
  }
  json maps = json::array();
  for (const auto & m : report.maps()) maps.push_back({{"name", m.name}, {"values", m.values}});
  const json doc = {
    {"scene", ctx.scene_id},
    {"pedestrian", ctx.pedestrian_id},
    {"step", ctx.step},
    {"radius", anchors.radius},
    {"anchors", anchor_list},
    {"features", features},
    {"maps", maps},
    {"logits", {{"motion", report.motion}, {"interaction", report.interaction}}},
    {"probability", report.probability},
  };
  return doc.dump(2) + "\n";
}

std::string explain_to_svg(const InterpretabilityReport & report, const AnchorSet & anchors, const ExplainContext & ctx)
{
  auto panels = report.maps();
  panels.push_back({"probability", report.probability});

  std::size_t n_dir = 0;
  std::size_t n_speed = 0;
  for (const auto & a : anchors.anchors) {
    n_dir = std::max(n_dir, a.direction_slot + 1);
    n_speed = std::max(n_speed, a.speed_slot + 1);
  }
  const int cell = 36;
  const int pad = 16;
  const int title = 22;
  const int panel_w = static_cast<int>(n_dir) * cell;
  const int panel_h = static_cast<int>(n_speed) * cell;
  const int columns = 4;
  const int rows = static_cast<int>((panels.size() + columns - 1) / columns);
  const int width = columns * (panel_w + pad) + pad;
  const int height = 30 + rows * (panel_h + title + pad) + pad;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<text x=\"" << pad << "\" y=\"20\" font-size=\"13\">scene " << ctx.scene_id << ", pedestrian "
      << ctx.pedestrian_id << ", step " << ctx.step << "</text>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto & values = panels[p].values;
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = values.empty() ? 0.0 : *lo_it;
    const double hi = values.empty() ? 0.0 : *hi_it;
    const int ox = pad + static_cast<int>(p % columns) * (panel_w + pad);
    const int oy = 30 + static_cast<int>(p / columns) * (panel_h + title + pad);
    svg << "<g>\n<text x=\"" << ox << "\" y=\"" << oy + 14 << "\">" << panels[p].name << "</text>\n";
    for (std::size_t k = 0; k < values.size() && k < anchors.size(); ++k) {
      const auto & a = anchors[k];
      // Fastest row on top, leftmost column turns hardest to the left.
      const int x = ox + static_cast<int>(n_dir - 1 - a.direction_slot) * cell;
      const int y = oy + title + static_cast<int>(n_speed - 1 - a.speed_slot) * cell;
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
          << heat_colour(values[k], lo, hi) << "\" stroke=\"#333\" stroke-width=\"0.5\"><title>anchor " << k << ": "
          << fmt("%.6g", values[k]) << "</title></rect>\n";
    }
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string metrics_csv(std::span<const MetricsReport> reports)
{
  std::ostringstream out;
  out << "model,ade,fde,col_i,top_k,top_ade,top_fde,n_scenes\n";
  for (const auto & r : reports) {
    out << r.model << ',' << fmt("%.6f", r.ade) << ',' << fmt("%.6f", r.fde) << ',' << fmt("%.4f", r.col_i) << ','
        << r.top_k << ',' << fmt("%.6f", r.top_ade) << ',' << fmt("%.6f", r.top_fde) << ',' << r.n_scenes << '\n';
  }
  return out.str();
}

std::string per_scene_csv(const MetricsReport & report)
{
  std::ostringstream out;
  out << "scene,ade,fde,collision,top_ade,top_fde\n";
  for (const auto & s : report.scenes) {
    out << s.scene_id << ',' << fmt("%.6f", s.ade) << ',' << fmt("%.6f", s.fde) << ',' << (s.collision ? 1 : 0) << ','
        << fmt("%.6f", s.top_ade) << ',' << fmt("%.6f", s.top_fde) << '\n';
  }
  return out.str();
}

std::string metrics_table(std::span<const MetricsReport> reports)
{
  std::size_t name_w = 5;
  std::size_t top_k = 3;
  for (const auto & r : reports) {
    name_w = std::max(name_w, r.model.size());
    top_k = r.top_k;
  }
  char line[256];
  std::ostringstream out;
  const std::string top_head = "Top-" + std::to_string(top_k) + " ADE/FDE";
  std::snprintf(line, sizeof(line), "%-*s  %13s  %7s  %15s  %6s\n", static_cast<int>(name_w), "Model", "ADE/FDE",
                "Col-I", top_head.c_str(), "Scenes");
  out << line;
  out << std::string(name_w + 2 + 13 + 2 + 7 + 2 + 15 + 2 + 6, '-') << '\n';
  for (const auto & r : reports) {
    const std::string err = fmt("%.2f", r.ade) + "/" + fmt("%.2f", r.fde);
    const std::string top = fmt("%.2f", r.top_ade) + "/" + fmt("%.2f", r.top_fde);
    std::snprintf(line, sizeof(line), "%-*s  %13s  %7s  %15s  %6zu\n", static_cast<int>(name_w), r.model.c_str(),
                  err.c_str(), fmt("%.1f", r.col_i).c_str(), top.c_str(), r.n_scenes);
    out << line;
  }
  return out.str();
}

std::string train_log_csv(const TrainLog & log)
{
  std::ostringstream out;
  out << "epoch,loss,accuracy,seconds\n";
  for (const auto & e : log) {
    out << e.epoch << ',' << fmt("%.9g", e.loss) << ',' << fmt("%.6f", e.accuracy) << ',' << fmt("%.3f", e.seconds)
        << '\n';
  }
  return out.str();
}

std::string mnl_fit_table(const MnlFit & fit)
{
  constexpr const char * labels[kNumFeatures] = {"beta_dir", "beta_occ", "beta_col", "beta_acc", "beta_dec"};
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s  %12s  %12s  %9s\n", "parameter", "estimate", "std_error", "z");
  out << line;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const double se = fit.std_error[f];
    const double z = std::isfinite(se) && se > 0.0 ? fit.beta[f] / se : 0.0;
    std::snprintf(line, sizeof(line), "%-10s  %12.6f  %12.6f  %9.2f\n", labels[f], fit.beta[f], se, z);
    out << line;
  }
  std::snprintf(line, sizeof(line), "observations %zu, log-likelihood %.6f, iterations %zu, %s\n", fit.observations,
                fit.log_likelihood, fit.iterations, fit.converged ? "converged" : "NOT converged");
  out << line;
  return out.str();
}

}  // namespace anchorcast
