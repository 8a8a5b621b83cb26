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

// Command-line front end. Everything goes through the C interface.

#include "anchorcast/anchorcast.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace
{

/// Thrown when a library call fails; carries the status for the exit code.
struct Failure
{
  ac_status status;
  std::string message;
};

void check(ac_status s)
{
  if (s != AC_OK) throw Failure{s, ac_last_error()};
}

int exit_code(ac_status s)
{
  switch (s) {
    case AC_OK: return 0;
    case AC_ERR_NUMERIC: return 3;
    case AC_ERR_INTERNAL: return 1;
    default: return 2;
  }
}

template <class T, void (*Free)(T *)>
struct Deleter
{
  void operator()(T * p) const { Free(p); }
};
using ConfigPtr = std::unique_ptr<ac_config, Deleter<ac_config, ac_config_free>>;
using DatasetPtr = std::unique_ptr<ac_dataset, Deleter<ac_dataset, ac_dataset_free>>;
using ModelPtr = std::unique_ptr<ac_model, Deleter<ac_model, ac_model_free>>;
using ChoicesPtr = std::unique_ptr<ac_choice_log, Deleter<ac_choice_log, ac_choice_log_free>>;

std::string take(char * s)
{
  std::string out = s ? s : "";
  ac_string_free(s);
  return out;
}

void write_file(const std::string & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Failure{AC_ERR_IO, "cannot write " + path};
}

/// "<dir>/<stem>.<tag><ext>" next to `path`.
std::string sibling(const std::string & path, const std::string & tag, const std::string & ext)
{
  const std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + "." + tag + ext)).string();
}

struct Overrides
{
  std::vector<std::pair<std::string, std::string>> values;

  template <class T>
  void add(const std::string & key, const std::optional<T> & v)
  {
    if (!v) return;
    if constexpr (std::is_same_v<T, std::string>) {
      values.emplace_back(key, "\"" + *v + "\"");
    } else if constexpr (std::is_same_v<T, bool>) {
      values.emplace_back(key, *v ? "true" : "false");
    } else {
      values.emplace_back(key, std::to_string(*v));
    }
  }
  void add_double(const std::string & key, const std::optional<double> & v)
  {
    if (!v) return;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", *v);
    values.emplace_back(key, buf);
  }
};

struct Common
{
  std::string config_path;
  std::optional<std::size_t> threads;
};

ConfigPtr make_config(const Common & common, const Overrides & extra)
{
  ac_config * raw = nullptr;
  if (common.config_path.empty()) {
    check(ac_config_default(&raw));
  } else {
    check(ac_config_load(common.config_path.c_str(), &raw));
  }
  ConfigPtr base(raw);
  Overrides all = extra;
  all.add("threads", common.threads);
  if (all.values.empty()) return base;

  // Flags are merged into the document first and validated together, so that
  // e.g. --min-pedestrians above the configured maximum works when
  // --max-pedestrians is raised in the same call.
  char * text = nullptr;
  check(ac_config_to_json(base.get(), &text));
  nlohmann::json doc = nlohmann::json::parse(take(text));
  for (const auto & [key, value] : all.values) {
    std::string pointer = "/" + key;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    doc[nlohmann::json::json_pointer(pointer)] = nlohmann::json::parse(value);
  }
  check(ac_config_parse(doc.dump().c_str(), &raw));
  return ConfigPtr(raw);
}

std::string config_value(const ac_config * cfg, const char * key)
{
  char * text = nullptr;
  check(ac_config_get(cfg, key, &text));
  return take(text);
}

DatasetPtr read_dataset(const std::string & path)
{
  ac_dataset * raw = nullptr;
  check(ac_dataset_read(path.c_str(), &raw));
  return DatasetPtr(raw);
}

/// Keeps the first `fraction` of the scenes (train side) or the rest.
DatasetPtr subset(DatasetPtr data, std::optional<double> fraction, bool first_part)
{
  if (!fraction) return data;
  ac_dataset * a = nullptr;
  ac_dataset * b = nullptr;
  check(ac_dataset_split(data.get(), *fraction, &a, &b));
  DatasetPtr pa(a);
  DatasetPtr pb(b);
  return first_part ? std::move(pa) : std::move(pb);
}

void print_fit(const ac_mnl_fit & fit)
{
  char * table = nullptr;
  check(ac_mnl_fit_table(&fit, &table));
  std::cout << take(table);
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"anchorcast: interpretable anchor-based pedestrian trajectory forecasting"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--threads", common.threads, "Worker threads (results do not depend on it)");

  // generate
  auto * gen = app.add_subcommand("generate", "Generate social-force circle-crossing scenes");
  std::string gen_out;
  std::optional<std::size_t> gen_scenes;
  std::optional<std::uint64_t> gen_seed;
  std::optional<int> gen_min;
  std::optional<int> gen_max;
  gen->add_option("--out,-o", gen_out, "Output ndjson path")->required();
  gen->add_option("--scenes", gen_scenes, "Number of scenes");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--min-pedestrians", gen_min);
  gen->add_option("--max-pedestrians", gen_max);

  // simulate-dcm
  auto * sim = app.add_subcommand("simulate-dcm", "Simulate logit-choosing agents and log their choices");
  std::string sim_out;
  std::optional<std::size_t> sim_scenes;
  std::uint64_t sim_seed = 11;
  std::optional<int> sim_min;
  std::optional<int> sim_max;
  bool sim_no_choices = false;
  double beta[AC_NUM_FEATURES] = {0.0, 0.0, 0.0, 0.0, 0.0};
  sim->add_option("--out,-o", sim_out, "Output ndjson path; choices go to <stem>.choices.ndjson")->required();
  sim->add_option("--scenes", sim_scenes);
  sim->add_option("--seed", sim_seed)->capture_default_str();
  sim->add_option("--min-pedestrians", sim_min);
  sim->add_option("--max-pedestrians", sim_max);
  sim->add_option("--beta-dir", beta[0])->capture_default_str();
  sim->add_option("--beta-occ", beta[1])->capture_default_str();
  sim->add_option("--beta-col", beta[2])->capture_default_str();
  sim->add_option("--beta-acc", beta[3])->capture_default_str();
  sim->add_option("--beta-dec", beta[4])->capture_default_str();
  sim->add_flag("--no-choices", sim_no_choices, "Skip the choice log (large for big runs)");

  // train
  auto * tr = app.add_subcommand("train", "Train a model (or fit the utility alone with --dcm-only)");
  std::string tr_data;
  std::string tr_out;
  std::string tr_log;
  std::string tr_choices;
  std::optional<std::size_t> tr_epochs;
  std::optional<std::size_t> tr_batch;
  std::optional<double> tr_lr;
  std::optional<std::uint64_t> tr_seed;
  std::optional<double> tr_split;
  bool tr_dcm_only = false;
  bool tr_clip = false;
  bool tr_free_running = false;
  bool tr_neighbours = false;
  tr->add_option("--data,-d", tr_data, "Training ndjson");
  tr->add_option("--out,-o", tr_out, "Checkpoint path")->required();
  tr->add_option("--log", tr_log, "Per-epoch CSV (default <stem>.log.csv next to the checkpoint)");
  tr->add_option("--choices", tr_choices, "Choice log to fit with --dcm-only instead of the dataset");
  tr->add_option("--epochs", tr_epochs);
  tr->add_option("--batch-size", tr_batch);
  tr->add_option("--lr", tr_lr);
  tr->add_option("--seed", tr_seed);
  tr->add_option("--split", tr_split, "Train on the first fraction of the scenes")->check(CLI::Range(0.0, 1.0));
  tr->add_flag("--dcm-only", tr_dcm_only, "Maximum-likelihood fit of beta with the network switched off");
  tr->add_flag("--clip", tr_clip, "Clip gradients at global norm 10");
  tr->add_flag("--free-running", tr_free_running, "Feed the model's own rollout instead of ground truth");
  tr->add_flag("--include-neighbours", tr_neighbours, "Also supervise fully observed neighbours");

  // evaluate
  auto * ev = app.add_subcommand("evaluate", "Roll out a model and report ADE/FDE, Col-I and Top-k");
  std::string ev_model;
  std::string ev_data;
  std::string ev_out;
  std::string ev_scenes;
  std::optional<double> ev_split;
  bool ev_replay = false;
  ev->add_option("--model,-m", ev_model, "Checkpoint (omit for the constant-velocity baseline only)");
  ev->add_option("--data,-d", ev_data, "Evaluation ndjson")->required();
  ev->add_option("--out,-o", ev_out, "Metrics CSV");
  ev->add_option("--scenes-csv", ev_scenes, "Per-scene CSV of the model");
  ev->add_option("--split", ev_split, "Evaluate the scenes after this fraction")->check(CLI::Range(0.0, 1.0));
  ev->add_flag("--neighbour-replay", ev_replay, "Neighbours follow the ground truth");

  // explain
  auto * ex = app.add_subcommand("explain", "Dump the score decomposition of one prediction step");
  std::string ex_model;
  std::string ex_data;
  std::int64_t ex_scene = 0;
  std::optional<int> ex_step;
  std::string ex_json;
  std::string ex_svg;
  ex->add_option("--model,-m", ex_model)->required();
  ex->add_option("--data,-d", ex_data)->required();
  ex->add_option("--scene", ex_scene)->required();
  ex->add_option("--step", ex_step, "Scene step (default: last observed step)");
  ex->add_option("--json", ex_json, "Write the report here instead of stdout");
  ex->add_option("--svg", ex_svg, "Heat-grid rendering");

  // gradcheck
  auto * gc = app.add_subcommand("gradcheck", "Compare the analytic gradient with central differences");
  std::uint64_t gc_seed = 1;
  gc->add_option("--seed", gc_seed)->capture_default_str();

  auto * pc = app.add_subcommand("print-config", "Print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Overrides ov;
    if (*gen) {
      ov.add("sim.n_scenes", gen_scenes);
      ov.add("sim.seed", gen_seed);
      ov.add("sim.min_pedestrians", gen_min);
      ov.add("sim.max_pedestrians", gen_max);
      const ConfigPtr cfg = make_config(common, ov);
      ac_dataset * raw = nullptr;
      check(ac_generate(cfg.get(), &raw));
      const DatasetPtr data(raw);
      check(ac_dataset_write(data.get(), gen_out.c_str(), cfg.get(), "social-force"));
      std::size_t n = 0;
      check(ac_dataset_size(data.get(), &n));
      std::cout << "wrote " << n << " scenes to " << gen_out << "\n";
    } else if (*sim) {
      ov.add("sim.n_scenes", sim_scenes);
      ov.add("sim.min_pedestrians", sim_min);
      ov.add("sim.max_pedestrians", sim_max);
      const ConfigPtr cfg = make_config(common, ov);
      ac_dataset * raw = nullptr;
      ac_choice_log * log_raw = nullptr;
      check(ac_simulate_dcm(cfg.get(), beta, sim_seed, &raw, sim_no_choices ? nullptr : &log_raw));
      const DatasetPtr data(raw);
      const ChoicesPtr log(log_raw);
      check(ac_dataset_write(data.get(), sim_out.c_str(), cfg.get(), "dcm-agents"));
      std::size_t n = 0;
      check(ac_dataset_size(data.get(), &n));
      std::cout << "wrote " << n << " scenes to " << sim_out;
      if (log) {
        const std::string choices = sibling(sim_out, "choices", ".ndjson");
        check(ac_choice_log_write(log.get(), choices.c_str()));
        std::size_t c = 0;
        check(ac_choice_log_size(log.get(), &c));
        std::cout << " and " << c << " choices to " << choices;
      }
      std::cout << "\n";
    } else if (*tr) {
      ov.add("train.epochs", tr_epochs);
      ov.add("train.batch_size", tr_batch);
      ov.add_double("train.learning_rate", tr_lr);
      ov.add("train.seed", tr_seed);
      if (tr_clip) ov.add_double("train.clip_norm", 10.0);
      if (tr_free_running) ov.add("train.teacher_forcing", std::optional<bool>(false));
      if (tr_neighbours) ov.add("train.include_neighbours", std::optional<bool>(true));
      const ConfigPtr cfg = make_config(common, ov);

      if (tr_dcm_only) {
        ac_mnl_fit fit{};
        if (!tr_choices.empty()) {
          ac_choice_log * raw = nullptr;
          check(ac_choice_log_read(tr_choices.c_str(), &raw));
          const ChoicesPtr log(raw);
          check(ac_fit_dcm_choices(log.get(), &fit));
        } else {
          if (tr_data.empty()) throw Failure{AC_ERR_ARGUMENT, "train --dcm-only needs --data or --choices"};
          const DatasetPtr data = subset(read_dataset(tr_data), tr_split, true);
          check(ac_fit_dcm_dataset(cfg.get(), data.get(), &fit));
        }
        print_fit(fit);
        ac_model * raw = nullptr;
        check(ac_model_create(cfg.get(), 0, &raw));
        const ModelPtr model(raw);
        check(ac_model_zero_network(model.get()));
        check(ac_model_set_beta(model.get(), fit.beta));
        check(ac_model_save(model.get(), tr_out.c_str()));
        if (!fit.converged) throw Failure{AC_ERR_NUMERIC, "utility fit did not converge"};
      } else {
        if (tr_data.empty()) throw Failure{AC_ERR_ARGUMENT, "train needs --data"};
        const DatasetPtr data = subset(read_dataset(tr_data), tr_split, true);
        // The initial weights follow train.seed.
        const std::uint64_t seed = std::stoull(config_value(cfg.get(), "train.seed"));
        ac_model * raw = nullptr;
        check(ac_model_create(cfg.get(), seed, &raw));
        const ModelPtr model(raw);
        char * log_csv = nullptr;
        check(ac_train(
          model.get(), cfg.get(), data.get(),
          [](size_t epoch, double loss, double accuracy, double seconds, void *) {
            std::printf("epoch %3zu  loss %12.4f  accuracy %.3f  %7.1fs\n", epoch, loss, accuracy, seconds);
            std::fflush(stdout);
          },
          nullptr, &log_csv));
        write_file(tr_log.empty() ? sibling(tr_out, "log", ".csv") : tr_log, take(log_csv));
        check(ac_model_save(model.get(), tr_out.c_str()));
      }
      std::cout << "saved " << tr_out << "\n";
    } else if (*ev) {
      if (ev_replay) ov.add("eval.neighbour_replay", std::optional<bool>(true));
      const ConfigPtr cfg = make_config(common, ov);
      const DatasetPtr data = subset(read_dataset(ev_data), ev_split, false);
      std::vector<ac_metrics> rows;
      if (!ev_model.empty()) {
        ac_model * raw = nullptr;
        check(ac_model_load(ev_model.c_str(), &raw));
        const ModelPtr model(raw);
        ac_metrics m{};
        char * scenes = nullptr;
        check(ac_evaluate(model.get(), cfg.get(), data.get(), &m, &scenes));
        const std::string scene_csv = take(scenes);
        if (!ev_scenes.empty()) write_file(ev_scenes, scene_csv);
        rows.push_back(m);
      }
      ac_metrics base{};
      check(ac_evaluate(nullptr, cfg.get(), data.get(), &base, nullptr));
      rows.push_back(base);
      char * table = nullptr;
      check(ac_metrics_table(rows.data(), rows.size(), &table));
      std::cout << take(table);
      if (!ev_out.empty()) {
        char * csv = nullptr;
        check(ac_metrics_csv(rows.data(), rows.size(), &csv));
        write_file(ev_out, take(csv));
      }
    } else if (*ex) {
      const ConfigPtr cfg = make_config(common, ov);
      const DatasetPtr data = read_dataset(ex_data);
      ac_model * raw = nullptr;
      check(ac_model_load(ex_model.c_str(), &raw));
      const ModelPtr model(raw);
      const int step = ex_step ? *ex_step : std::stoi(config_value(cfg.get(), "horizon.t_obs")) - 1;
      char * json = nullptr;
      char * svg = nullptr;
      check(ac_explain(model.get(), data.get(), ex_scene, step, &json, ex_svg.empty() ? nullptr : &svg));
      if (ex_json.empty()) {
        std::cout << take(json);
      } else {
        write_file(ex_json, take(json));
      }
      if (!ex_svg.empty()) write_file(ex_svg, take(svg));
    } else if (*gc) {
      const ConfigPtr cfg = make_config(common, ov);
      ac_gradcheck_result r{};
      check(ac_gradcheck(cfg.get(), gc_seed, &r));
      std::printf("%-10s  %7s  %14s\n", "group", "checked", "max_rel_error");
      for (int g = 0; g < AC_NUM_PARAM_GROUPS; ++g) {
        std::printf("%-10s  %7zu  %14.3e\n", ac_param_group_name(g), r.group_checked[g], r.group_error[g]);
      }
      std::printf("max relative error %.3e: %s\n", r.max_rel_error, r.passed ? "PASS" : "FAIL");
      if (!r.passed) return 3;
    } else if (*pc) {
      const ConfigPtr cfg = make_config(common, ov);
      char * text = nullptr;
      check(ac_config_to_json(cfg.get(), &text));
      std::cout << take(text);
    }
  } catch (const Failure & f) {
    std::cerr << "anchorcast: " << f.message << "\n";
    return exit_code(f.status);
  }
  return 0;
}
