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

#include "config.hpp"

#include "error.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace anchorcast
{

using nlohmann::json;

namespace
{

constexpr double kDeg = M_PI / 180.0;

/// Reads the keys of one JSON object and remembers which ones were used.
class Section
{
public:
  Section(const json & obj, std::string path) : obj_(obj), path_(std::move(path))
  {
    if (!obj_.is_object()) fail(ErrorCode::kValidation, "config: '" + where() + "' must be an object");
  }

  template <class T>
  void read(const char * key, T & out)
  {
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    seen_.insert(key);
    const std::string name = join(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw std::invalid_argument("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw std::invalid_argument("expected an integer");
        if (std::is_unsigned_v<T> && it->is_number_integer() && !it->is_number_unsigned() && it->template get<long long>() < 0) {
          throw std::invalid_argument("expected a non-negative integer");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw std::invalid_argument("expected a string");
      }
      out = it->template get<T>();
    } catch (const std::exception & e) {
      fail(ErrorCode::kValidation, "config: '" + name + "': " + e.what());
    }
  }

  void read_degrees(const char * key, double & radians)
  {
    if (obj_.find(key) == obj_.end()) return;
    double deg = 0.0;
    read(key, deg);
    radians = deg * kDeg;
  }

  void read_degree_list(const char * key, std::vector<double> & radians)
  {
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    seen_.insert(key);
    if (!it->is_array()) fail(ErrorCode::kValidation, "config: '" + join(key) + "': expected an array");
    radians.clear();
    for (const auto & v : *it) {
      if (!v.is_number()) fail(ErrorCode::kValidation, "config: '" + join(key) + "': expected numbers");
      radians.push_back(v.get<double>() * kDeg);
    }
  }

  void read_list(const char * key, std::vector<double> & out)
  {
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    seen_.insert(key);
    if (!it->is_array()) fail(ErrorCode::kValidation, "config: '" + join(key) + "': expected an array");
    out.clear();
    for (const auto & v : *it) {
      if (!v.is_number()) fail(ErrorCode::kValidation, "config: '" + join(key) + "': expected numbers");
      out.push_back(v.get<double>());
    }
  }

  /// Sub-object, or nullptr when absent.
  const json * child(const char * key)
  {
    const auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  std::string join(const std::string & key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const
  {
    for (const auto & item : obj_.items()) {
      if (!seen_.count(item.key())) fail(ErrorCode::kValidation, "config: unknown key '" + join(item.key()) + "'");
    }
  }

private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const json & obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_horizon(const json & j, Horizon & h)
{
  Section s(j, "horizon");
  s.read("t_obs", h.t_obs);
  s.read("t_pred", h.t_pred);
  s.read("dt", h.dt);
  s.finish();
}

void read_anchors(const json & j, AnchorConfig & a)
{
  Section s(j, "anchors");
  s.read_degree_list("direction_offsets_deg", a.direction_offsets);
  s.read_list("speed_multipliers", a.speed_multipliers);
  s.read("min_radius", a.min_radius);
  s.finish();
}

void read_dcm(const json & j, FixedDcmParams & d)
{
  Section s(j, "dcm");
  s.read("perception_radius", d.perception_radius);
  s.read("occupancy_floor", d.occupancy_floor);
  s.read("collision_decay", d.collision_decay);
  s.read_degrees("collision_cone_deg", d.collision_cone);
  s.read_degrees("leader_cone_deg", d.leader_cone);
  s.read("leader_range", d.leader_range);
  s.read_degrees("alignment_cone_deg", d.alignment_cone);
  s.read("leader_exponent", d.leader_exponent);
  s.finish();
}

void read_model(const json & j, ModelConfig & m)
{
  Section s(j, "model");
  s.read("embedding_dim", m.embedding_dim);
  s.read("pooling_dim", m.pooling_dim);
  s.read("hidden_dim", m.hidden_dim);
  s.read("grid_size", m.grid_size);
  s.read("grid_resolution", m.grid_resolution);
  s.read("goal_conditioning", m.goal_conditioning);
  s.read("goal_dim", m.goal_dim);
  s.read("heading_eps", m.heading_eps);
  s.read("sigma_min", m.sigma_min);
  s.read("sigma_max", m.sigma_max);
  s.read("rho_max", m.rho_max);
  s.finish();
}

void read_train(const json & j, TrainConfig & t)
{
  Section s(j, "train");
  s.read("learning_rate", t.learning_rate);
  s.read("batch_size", t.batch_size);
  s.read("epochs", t.epochs);
  s.read("seed", t.seed);
  s.read("beta1", t.beta1);
  s.read("beta2", t.beta2);
  s.read("epsilon", t.epsilon);
  s.read("clip_norm", t.clip_norm);
  s.read("teacher_forcing", t.teacher_forcing);
  s.read("include_neighbours", t.include_neighbours);
  s.read("dcm_only", t.dcm_only);
  s.finish();
}

void read_sim(const json & j, SimConfig & c)
{
  Section s(j, "sim");
  s.read("n_scenes", c.n_scenes);
  s.read("min_pedestrians", c.min_pedestrians);
  s.read("max_pedestrians", c.max_pedestrians);
  s.read("arena_radius", c.arena_radius);
  s.read("desired_speed", c.desired_speed);
  s.read("speed_jitter", c.speed_jitter);
  s.read("relaxation_time", c.relaxation_time);
  s.read("repulsion_strength", c.repulsion_strength);
  s.read("repulsion_range", c.repulsion_range);
  s.read("body_radius", c.body_radius);
  s.read("anisotropy", c.anisotropy);
  s.read("goal_tolerance", c.goal_tolerance);
  s.read("min_spawn_distance", c.min_spawn_distance);
  s.read("substeps", c.substeps);
  s.read("seed", c.seed);
  if (const json * cj = s.child("corridor")) {
    Section cs(*cj, "sim.corridor");
    cs.read("length", c.corridor.length);
    cs.read("width", c.corridor.width);
    cs.read("counterflow", c.corridor.counterflow);
    cs.read_degrees("heading_jitter_deg", c.corridor.heading_jitter);
    cs.read("min_speed", c.corridor.min_speed);
    cs.read("max_speed", c.corridor.max_speed);
    cs.finish();
  }
  s.finish();
}

void read_eval(const json & j, EvalConfig & e)
{
  Section s(j, "eval");
  s.read("collision_threshold", e.collision_threshold);
  s.read("interp_substeps", e.interp_substeps);
  s.read("top_k", e.top_k);
  s.read("neighbour_replay", e.neighbour_replay);
  s.finish();
}

void read_paths(const json & j, PathsConfig & p)
{
  Section s(j, "paths");
  s.read("data", p.data);
  s.read("checkpoint", p.checkpoint);
  s.read("output", p.output);
  s.finish();
}

// Rounded to 1e-9 degrees so that 60 prints as 60 and not 59.99999999999999.
double degrees(double radians) { return std::round(radians / kDeg * 1e9) / 1e9; }

std::vector<double> to_degrees(const std::vector<double> & radians)
{
  std::vector<double> out;
  for (double r : radians) out.push_back(degrees(r));
  return out;
}

}  // namespace

void validate(const RunConfig & cfg)
{
  if (cfg.threads < 1) fail(ErrorCode::kValidation, "config: threads must be at least 1");
  if (cfg.horizon.t_obs < 2) fail(ErrorCode::kValidation, "config: horizon.t_obs must be at least 2");
  if (cfg.horizon.t_pred <= cfg.horizon.t_obs) fail(ErrorCode::kValidation, "config: horizon.t_pred must exceed t_obs");
  if (!(cfg.horizon.dt > 0.0)) fail(ErrorCode::kValidation, "config: horizon.dt must be positive");
  validate(cfg.model);
  validate(cfg.train);
  validate(cfg.sim);
  validate(cfg.eval);
}

RunConfig parse_config(const std::string & json_text)
{
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error & e) {
    fail(ErrorCode::kValidation, std::string("config: malformed JSON: ") + e.what());
  }
  RunConfig cfg;
  Section s(root, "");
  s.read("threads", cfg.threads);
  if (const json * j = s.child("horizon")) read_horizon(*j, cfg.horizon);
  if (const json * j = s.child("anchors")) read_anchors(*j, cfg.model.anchors);
  if (const json * j = s.child("dcm")) read_dcm(*j, cfg.model.dcm);
  if (const json * j = s.child("model")) read_model(*j, cfg.model);
  if (const json * j = s.child("train")) read_train(*j, cfg.train);
  if (const json * j = s.child("sim")) read_sim(*j, cfg.sim);
  if (const json * j = s.child("eval")) read_eval(*j, cfg.eval);
  if (const json * j = s.child("paths")) read_paths(*j, cfg.paths);
  s.finish();
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string & path)
{
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig & cfg, int indent)
{
  const auto & m = cfg.model;
  const auto & d = m.dcm;
  const auto & t = cfg.train;
  const auto & s = cfg.sim;
  json j = {
    {"threads", cfg.threads},
    {"horizon", {{"t_obs", cfg.horizon.t_obs}, {"t_pred", cfg.horizon.t_pred}, {"dt", cfg.horizon.dt}}},
    {"anchors",
     {{"direction_offsets_deg", to_degrees(m.anchors.direction_offsets)},
      {"speed_multipliers", m.anchors.speed_multipliers},
      {"min_radius", m.anchors.min_radius}}},
    {"dcm",
     {{"perception_radius", d.perception_radius},
      {"occupancy_floor", d.occupancy_floor},
      {"collision_decay", d.collision_decay},
      {"collision_cone_deg", degrees(d.collision_cone)},
      {"leader_cone_deg", degrees(d.leader_cone)},
      {"leader_range", d.leader_range},
      {"alignment_cone_deg", degrees(d.alignment_cone)},
      {"leader_exponent", d.leader_exponent}}},
    {"model",
     {{"embedding_dim", m.embedding_dim},
      {"pooling_dim", m.pooling_dim},
      {"hidden_dim", m.hidden_dim},
      {"grid_size", m.grid_size},
      {"grid_resolution", m.grid_resolution},
      {"goal_conditioning", m.goal_conditioning},
      {"goal_dim", m.goal_dim},
      {"heading_eps", m.heading_eps},
      {"sigma_min", m.sigma_min},
      {"sigma_max", m.sigma_max},
      {"rho_max", m.rho_max}}},
    {"train",
     {{"learning_rate", t.learning_rate},
      {"batch_size", t.batch_size},
      {"epochs", t.epochs},
      {"seed", t.seed},
      {"beta1", t.beta1},
      {"beta2", t.beta2},
      {"epsilon", t.epsilon},
      {"clip_norm", t.clip_norm},
      {"teacher_forcing", t.teacher_forcing},
      {"include_neighbours", t.include_neighbours},
      {"dcm_only", t.dcm_only}}},
    {"sim",
     {{"n_scenes", s.n_scenes},
      {"min_pedestrians", s.min_pedestrians},
      {"max_pedestrians", s.max_pedestrians},
      {"arena_radius", s.arena_radius},
      {"desired_speed", s.desired_speed},
      {"speed_jitter", s.speed_jitter},
      {"relaxation_time", s.relaxation_time},
      {"repulsion_strength", s.repulsion_strength},
      {"repulsion_range", s.repulsion_range},
      {"body_radius", s.body_radius},
      {"anisotropy", s.anisotropy},
      {"goal_tolerance", s.goal_tolerance},
      {"min_spawn_distance", s.min_spawn_distance},
      {"substeps", s.substeps},
      {"seed", s.seed},
      {"corridor",
       {{"length", s.corridor.length},
        {"width", s.corridor.width},
        {"counterflow", s.corridor.counterflow},
        {"heading_jitter_deg", degrees(s.corridor.heading_jitter)},
        {"min_speed", s.corridor.min_speed},
        {"max_speed", s.corridor.max_speed}}}}},
    {"eval",
     {{"collision_threshold", cfg.eval.collision_threshold},
      {"interp_substeps", cfg.eval.interp_substeps},
      {"top_k", cfg.eval.top_k},
      {"neighbour_replay", cfg.eval.neighbour_replay}}},
    {"paths", {{"data", cfg.paths.data}, {"checkpoint", cfg.paths.checkpoint}, {"output", cfg.paths.output}}},
  };
  return j.dump(indent);
}

}  // namespace anchorcast
