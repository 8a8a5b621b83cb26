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

#include "anchorcast/anchorcast.h"

#include "checkpoint.hpp"
#include "config.hpp"
#include "data.hpp"
#include "error.hpp"
#include "evaluation.hpp"
#include "gradcheck.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "simulate.hpp"
#include "training.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>

using namespace anchorcast;

struct ac_config
{
  RunConfig cfg;
};

struct ac_dataset
{
  std::vector<Scene> scenes;
};

struct ac_choice_log
{
  std::vector<ChoiceRecord> records;
};

struct ac_model
{
  ModelParams params;
};

namespace
{

thread_local std::string g_last_error;

template <class F>
ac_status guarded(F && body)
{
  try {
    body();
    return AC_OK;
  } catch (const Error & e) {
    g_last_error = e.what();
    return static_cast<ac_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc &) {
    g_last_error = "out of memory";
  } catch (const std::exception & e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return AC_ERR_INTERNAL;
}

void require(const void * p, const char * what)
{
  if (!p) fail(ErrorCode::kArgument, std::string(what) + " must not be null");
}

char * dup_string(const std::string & s)
{
  char * out = static_cast<char *>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put_string(char ** out, const std::string & s)
{
  if (out) *out = dup_string(s);
}

ac_mnl_fit to_c(const MnlFit & fit)
{
  ac_mnl_fit out{};
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    out.beta[f] = fit.beta[f];
    out.std_error[f] = fit.std_error[f];
  }
  out.log_likelihood = fit.log_likelihood;
  out.iterations = fit.iterations;
  out.observations = fit.observations;
  out.converged = fit.converged ? 1 : 0;
  return out;
}

MnlFit from_c(const ac_mnl_fit & in)
{
  MnlFit fit;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    fit.beta[f] = in.beta[f];
    fit.std_error[f] = in.std_error[f];
  }
  fit.log_likelihood = in.log_likelihood;
  fit.iterations = in.iterations;
  fit.observations = in.observations;
  fit.converged = in.converged != 0;
  return fit;
}

MetricsReport from_c(const ac_metrics & m)
{
  MetricsReport r;
  r.model = m.model;
  r.ade = m.ade;
  r.fde = m.fde;
  r.col_i = m.col_i;
  r.top_ade = m.top_ade;
  r.top_fde = m.top_fde;
  r.top_k = m.top_k;
  r.n_scenes = m.n_scenes;
  return r;
}

void write_text(const std::string & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out << text;
}

}  // namespace

extern "C" {

const char * ac_version(void) { return "0.1.0"; }

const char * ac_last_error(void) { return g_last_error.c_str(); }

void ac_string_free(char * s) { std::free(s); }

ac_status ac_config_default(ac_config ** out)
{
  return guarded([&] {
    require(out, "out");
    *out = new ac_config{};
  });
}

ac_status ac_config_parse(const char * json, ac_config ** out)
{
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new ac_config{parse_config(json)};
  });
}

ac_status ac_config_load(const char * path, ac_config ** out)
{
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new ac_config{load_config(path)};
  });
}

namespace
{

nlohmann::json * find_key(nlohmann::json & doc, const std::string & path)
{
  nlohmann::json * node = &doc;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (!node->is_object() || !node->contains(key)) fail(ErrorCode::kValidation, "config: unknown key '" + path + "'");
    node = &(*node)[key];
    if (dot == std::string::npos) return node;
    pos = dot + 1;
  }
}

}  // namespace

ac_status ac_config_set(ac_config * cfg, const char * key_path, const char * json_value)
{
  return guarded([&] {
    require(cfg, "cfg");
    require(key_path, "key_path");
    require(json_value, "json_value");
    nlohmann::json doc = nlohmann::json::parse(config_to_json(cfg->cfg));
    nlohmann::json * node = find_key(doc, key_path);
    try {
      *node = nlohmann::json::parse(json_value);
    } catch (const nlohmann::json::parse_error &) {
      fail(ErrorCode::kValidation, std::string("config: value for '") + key_path + "' is not valid JSON: " + json_value);
    }
    cfg->cfg = parse_config(doc.dump());
  });
}

ac_status ac_config_get(const ac_config * cfg, const char * key_path, char ** json_value)
{
  return guarded([&] {
    require(cfg, "cfg");
    require(key_path, "key_path");
    require(json_value, "json_value");
    nlohmann::json doc = nlohmann::json::parse(config_to_json(cfg->cfg));
    *json_value = dup_string(find_key(doc, key_path)->dump());
  });
}

ac_status ac_config_to_json(const ac_config * cfg, char ** out)
{
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = dup_string(config_to_json(cfg->cfg, 2) + "\n");
  });
}

void ac_config_free(ac_config * cfg) { delete cfg; }

ac_status ac_dataset_read(const char * path, ac_dataset ** out)
{
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new ac_dataset{read_scenes(path)};
  });
}

ac_status ac_dataset_write(const ac_dataset * data, const char * path, const ac_config * cfg, const char * generator)
{
  return guarded([&] {
    require(data, "data");
    require(path, "path");
    write_scenes(data->scenes, std::string(path));
    if (!cfg) return;
    std::size_t positions = 0;
    std::size_t pedestrians = 0;
    for (const auto & s : data->scenes) {
      pedestrians += s.trajectories.size();
      for (const auto & tr : s.trajectories) {
        for (const auto & p : tr.positions) positions += p ? 1 : 0;
      }
    }
    const nlohmann::json manifest = {
      {"generator", generator ? generator : ""},
      {"scenes", data->scenes.size()},
      {"pedestrians", pedestrians},
      {"positions", positions},
      {"seed", cfg->cfg.sim.seed},
      {"config", nlohmann::json::parse(config_to_json(cfg->cfg))},
    };
    write_text(sidecar_path(path, "manifest", ".json"), manifest.dump(2) + "\n");
  });
}

ac_status ac_dataset_size(const ac_dataset * data, size_t * n_scenes)
{
  return guarded([&] {
    require(data, "data");
    require(n_scenes, "n_scenes");
    *n_scenes = data->scenes.size();
  });
}

ac_status ac_dataset_split(const ac_dataset * data, double fraction, ac_dataset ** first, ac_dataset ** second)
{
  return guarded([&] {
    require(data, "data");
    require(first, "first");
    require(second, "second");
    if (!(fraction >= 0.0 && fraction <= 1.0)) fail(ErrorCode::kArgument, "split fraction must lie in [0, 1]");
    const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(data->scenes.size())));
    auto a = std::make_unique<ac_dataset>();
    auto b = std::make_unique<ac_dataset>();
    a->scenes.assign(data->scenes.begin(), data->scenes.begin() + static_cast<std::ptrdiff_t>(n));
    b->scenes.assign(data->scenes.begin() + static_cast<std::ptrdiff_t>(n), data->scenes.end());
    *first = a.release();
    *second = b.release();
  });
}

void ac_dataset_free(ac_dataset * data) { delete data; }

ac_status ac_generate(const ac_config * cfg, ac_dataset ** out)
{
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = new ac_dataset{generate_social_force(cfg->cfg.sim, cfg->cfg.horizon, cfg->cfg.threads)};
  });
}

ac_status ac_simulate_dcm(
  const ac_config * cfg, const double beta[AC_NUM_FEATURES], uint64_t seed, ac_dataset ** data, ac_choice_log ** log)
{
  return guarded([&] {
    require(cfg, "cfg");
    require(beta, "beta");
    require(data, "data");
    BetaWeights b;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      if (!std::isfinite(beta[f])) fail(ErrorCode::kArgument, "beta must be finite");
      b[f] = beta[f];
    }
    DcmSimulation sim = simulate_dcm_agents(b, cfg->cfg.sim, cfg->cfg.model, cfg->cfg.horizon, seed, log != nullptr);
    auto d = std::make_unique<ac_dataset>(ac_dataset{std::move(sim.scenes)});
    if (log) *log = new ac_choice_log{std::move(sim.choices)};
    *data = d.release();
  });
}

ac_status ac_choice_log_read(const char * path, ac_choice_log ** out)
{
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new ac_choice_log{read_choices(path)};
  });
}

ac_status ac_choice_log_write(const ac_choice_log * log, const char * path)
{
  return guarded([&] {
    require(log, "log");
    require(path, "path");
    write_choices(log->records, path);
  });
}

ac_status ac_choice_log_size(const ac_choice_log * log, size_t * n_choices)
{
  return guarded([&] {
    require(log, "log");
    require(n_choices, "n_choices");
    *n_choices = log->records.size();
  });
}

void ac_choice_log_free(ac_choice_log * log) { delete log; }

ac_status ac_model_create(const ac_config * cfg, uint64_t seed, ac_model ** out)
{
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = new ac_model{ModelParams::random(cfg->cfg.model, seed)};
  });
}

ac_status ac_model_load(const char * path, ac_model ** out)
{
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new ac_model{load_checkpoint(std::string(path))};
  });
}

ac_status ac_model_save(const ac_model * model, const char * path)
{
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    save_checkpoint(model->params, std::string(path));
  });
}

ac_status ac_model_param_count(const ac_model * model, size_t * n)
{
  return guarded([&] {
    require(model, "model");
    require(n, "n");
    *n = model->params.flat().size();
  });
}

ac_status ac_model_get_beta(const ac_model * model, double beta[AC_NUM_FEATURES])
{
  return guarded([&] {
    require(model, "model");
    require(beta, "beta");
    const BetaWeights b = model->params.beta();
    for (std::size_t f = 0; f < kNumFeatures; ++f) beta[f] = b[f];
  });
}

ac_status ac_model_set_beta(ac_model * model, const double beta[AC_NUM_FEATURES])
{
  return guarded([&] {
    require(model, "model");
    require(beta, "beta");
    BetaWeights b;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      if (!std::isfinite(beta[f])) fail(ErrorCode::kArgument, "beta must be finite");
      b[f] = beta[f];
    }
    model->params.set_beta(b);
  });
}

ac_status ac_model_zero_network(ac_model * model)
{
  return guarded([&] {
    require(model, "model");
    model->params.zero_network();
  });
}

void ac_model_free(ac_model * model) { delete model; }

ac_status ac_train(
  ac_model * model, const ac_config * cfg, const ac_dataset * data, ac_epoch_callback on_epoch, void * user,
  char ** log_csv)
{
  return guarded([&] {
    require(model, "model");
    require(cfg, "cfg");
    require(data, "data");
    const TrainLog log = train(model->params, data->scenes, cfg->cfg.horizon, cfg->cfg.train, [&](const EpochLog & e) {
      if (on_epoch) on_epoch(e.epoch, e.loss, e.accuracy, e.seconds, user);
    });
    put_string(log_csv, train_log_csv(log));
  });
}

ac_status ac_fit_dcm_choices(const ac_choice_log * log, ac_mnl_fit * out)
{
  return guarded([&] {
    require(log, "log");
    require(out, "out");
    std::vector<ChoiceObservation> obs;
    obs.reserve(log->records.size());
    for (const auto & r : log->records) obs.push_back(ChoiceObservation{r.features, r.chosen});
    *out = to_c(fit_mnl(obs));
  });
}

ac_status ac_fit_dcm_dataset(const ac_config * cfg, const ac_dataset * data, ac_mnl_fit * out)
{
  return guarded([&] {
    require(cfg, "cfg");
    require(data, "data");
    require(out, "out");
    *out = to_c(fit_mnl(observed_choices(data->scenes, cfg->cfg.model)));
  });
}

ac_status ac_mnl_fit_table(const ac_mnl_fit * fit, char ** out)
{
  return guarded([&] {
    require(fit, "fit");
    require(out, "out");
    *out = dup_string(mnl_fit_table(from_c(*fit)));
  });
}

ac_status ac_evaluate(
  const ac_model * model, const ac_config * cfg, const ac_dataset * data, ac_metrics * out, char ** scene_csv)
{
  return guarded([&] {
    require(cfg, "cfg");
    require(data, "data");
    require(out, "out");
    MetricsReport r;
    if (model) {
      r = evaluate(ModelPredictor(model->params), data->scenes, cfg->cfg.horizon, cfg->cfg.eval, cfg->cfg.threads);
    } else {
      r = evaluate(ConstantVelocityPredictor(), data->scenes, cfg->cfg.horizon, cfg->cfg.eval, cfg->cfg.threads);
    }
    ac_metrics m{};
    std::snprintf(m.model, sizeof(m.model), "%s", r.model.c_str());
    m.ade = r.ade;
    m.fde = r.fde;
    m.col_i = r.col_i;
    m.top_ade = r.top_ade;
    m.top_fde = r.top_fde;
    m.top_k = r.top_k;
    m.n_scenes = r.n_scenes;
    put_string(scene_csv, per_scene_csv(r));
    *out = m;
  });
}

ac_status ac_metrics_csv(const ac_metrics * rows, size_t n, char ** out)
{
  return guarded([&] {
    require(out, "out");
    if (n > 0) require(rows, "rows");
    std::vector<MetricsReport> reports;
    for (size_t i = 0; i < n; ++i) reports.push_back(from_c(rows[i]));
    *out = dup_string(metrics_csv(reports));
  });
}

ac_status ac_metrics_table(const ac_metrics * rows, size_t n, char ** out)
{
  return guarded([&] {
    require(out, "out");
    if (n > 0) require(rows, "rows");
    std::vector<MetricsReport> reports;
    for (size_t i = 0; i < n; ++i) reports.push_back(from_c(rows[i]));
    *out = dup_string(metrics_table(reports));
  });
}

ac_status ac_explain(const ac_model * model, const ac_dataset * data, int64_t scene_id, int step, char ** json, char ** svg)
{
  return guarded([&] {
    require(model, "model");
    require(data, "data");
    const Scene * scene = nullptr;
    for (const auto & s : data->scenes) {
      if (s.id == scene_id) scene = &s;
    }
    if (!scene) fail(ErrorCode::kNotFound, "unknown scene id " + std::to_string(scene_id));
    const std::size_t focus = scene->primary_index();
    StepInput input;
    const StepOutput out = observe_step(model->params, *scene, focus, step, &input);
    const InterpretabilityReport report =
      explain(input.state, input.anchors, model->params.beta(), out.motion, out.interaction, model->params.config().dcm);
    const ExplainContext ctx{scene->id, scene->primary_id, step};
    put_string(json, explain_to_json(report, input.anchors, ctx));
    put_string(svg, explain_to_svg(report, input.anchors, ctx));
  });
}

const char * ac_param_group_name(int group)
{
  if (group < 0 || group >= static_cast<int>(kNumParamGroups)) return "";
  return group_name(static_cast<ParamGroup>(group));
}

ac_status ac_gradcheck(const ac_config * cfg, uint64_t seed, ac_gradcheck_result * out)
{
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    const Horizon & horizon = cfg->cfg.horizon;
    const Scene scene = gradcheck_scene(horizon, seed);
    ModelParams params = ModelParams::random(cfg->cfg.model, seed);
    // Non-zero beta so its path through the softmax is exercised too.
    Rng rng(derive_seed(seed, 0xbe7a));
    BetaWeights beta;
    for (std::size_t f = 0; f < kNumFeatures; ++f) beta[f] = rng.uniform(-1.0, 1.0);
    params.set_beta(beta);
    const std::vector<Sequence> seqs = scene_sequences(scene, horizon, params.config(), true);
    std::vector<const Sequence *> batch;
    for (const auto & s : seqs) batch.push_back(&s);
    GradcheckConfig gc;
    gc.seed = seed;
    const GradcheckReport r = gradcheck(params, batch, gc);
    ac_gradcheck_result res{};
    res.max_rel_error = r.max_rel_error;
    for (std::size_t g = 0; g < kNumParamGroups; ++g) {
      res.group_error[g] = r.groups[g].max_rel_error;
      res.group_checked[g] = r.groups[g].checked;
    }
    res.passed = r.passed ? 1 : 0;
    *out = res;
  });
}

}  // extern "C"
