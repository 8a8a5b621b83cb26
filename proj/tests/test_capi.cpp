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

// Exercises the shared library through its C header only.
#include "anchorcast/anchorcast.h"
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>

namespace
{

std::string temp_path(const std::string & name)
{
  const auto dir = std::filesystem::temp_directory_path() / "anchorcast_capi_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

std::string take(char * s)
{
  std::string out = s ? s : "";
  ac_string_free(s);
  return out;
}

struct Handles
{
  ac_config * cfg = nullptr;
  ac_dataset * data = nullptr;
  ac_model * model = nullptr;

  Handles()
  {
    REQUIRE(ac_config_default(&cfg) == AC_OK);
    REQUIRE(ac_config_set(cfg, "model.embedding_dim", "4") == AC_OK);
    REQUIRE(ac_config_set(cfg, "model.pooling_dim", "4") == AC_OK);
    REQUIRE(ac_config_set(cfg, "model.hidden_dim", "4") == AC_OK);
    REQUIRE(ac_config_set(cfg, "sim.n_scenes", "6") == AC_OK);
    REQUIRE(ac_generate(cfg, &data) == AC_OK);
    REQUIRE(ac_model_create(cfg, 5, &model) == AC_OK);
  }
  ~Handles()
  {
    ac_model_free(model);
    ac_dataset_free(data);
    ac_config_free(cfg);
  }
};

}  // namespace

TEST_CASE("configuration handles")
{
  ac_config * cfg = nullptr;
  REQUIRE(ac_config_default(&cfg) == AC_OK);
  char * value = nullptr;
  REQUIRE(ac_config_get(cfg, "train.batch_size", &value) == AC_OK);
  CHECK(take(value) == "8");
  CHECK(ac_config_set(cfg, "train.epochs", "3") == AC_OK);
  REQUIRE(ac_config_get(cfg, "train.epochs", &value) == AC_OK);
  CHECK(take(value) == "3");
  CHECK(ac_config_set(cfg, "train.epochz", "3") == AC_ERR_VALIDATION);
  CHECK(std::string(ac_last_error()).find("train.epochz") != std::string::npos);
  CHECK(ac_config_set(cfg, "train.epochs", "\"three\"") == AC_ERR_VALIDATION);
  CHECK(ac_config_set(cfg, "train.epochs", "{oops") == AC_ERR_VALIDATION);
  CHECK(ac_config_get(cfg, "train.nothing", &value) == AC_ERR_VALIDATION);
  char * text = nullptr;
  REQUIRE(ac_config_to_json(cfg, &text) == AC_OK);
  ac_config * again = nullptr;
  CHECK(ac_config_parse(text, &again) == AC_OK);
  ac_string_free(text);
  ac_config_free(again);
  CHECK(ac_config_parse("{\"bogus\": 1}", &again) == AC_ERR_VALIDATION);
  CHECK(ac_config_load("/nonexistent.json", &again) == AC_ERR_IO);
  CHECK(ac_config_default(nullptr) == AC_ERR_ARGUMENT);
  ac_config_free(cfg);
  ac_config_free(nullptr);
}

TEST_CASE("datasets and models round-trip through files")
{
  Handles h;
  const std::string path = temp_path("data.ndjson");
  REQUIRE(ac_dataset_write(h.data, path.c_str(), h.cfg, "test") == AC_OK);
  CHECK(std::filesystem::exists(temp_path("data.manifest.json")));
  ac_dataset * back = nullptr;
  REQUIRE(ac_dataset_read(path.c_str(), &back) == AC_OK);
  std::size_t n = 0;
  CHECK(ac_dataset_size(back, &n) == AC_OK);
  CHECK(n == 6);
  ac_dataset *a = nullptr, *b = nullptr;
  REQUIRE(ac_dataset_split(back, 0.5, &a, &b) == AC_OK);
  std::size_t na = 0, nb = 0;
  ac_dataset_size(a, &na);
  ac_dataset_size(b, &nb);
  CHECK(na == 3);
  CHECK(nb == 3);
  CHECK(ac_dataset_split(back, 1.5, &a, &b) == AC_ERR_ARGUMENT);
  ac_dataset_free(a);
  ac_dataset_free(b);
  ac_dataset_free(back);
  CHECK(ac_dataset_read("/nonexistent.ndjson", &back) == AC_ERR_IO);

  const double beta[AC_NUM_FEATURES] = {-2, -1, -1.5, 0.5, 0.25};
  REQUIRE(ac_model_set_beta(h.model, beta) == AC_OK);
  const std::string ckpt = temp_path("model.ckpt");
  REQUIRE(ac_model_save(h.model, ckpt.c_str()) == AC_OK);
  ac_model * loaded = nullptr;
  REQUIRE(ac_model_load(ckpt.c_str(), &loaded) == AC_OK);
  double got[AC_NUM_FEATURES];
  REQUIRE(ac_model_get_beta(loaded, got) == AC_OK);
  for (int i = 0; i < AC_NUM_FEATURES; ++i) CHECK(got[i] == beta[i]);
  std::size_t p1 = 0, p2 = 0;
  ac_model_param_count(h.model, &p1);
  ac_model_param_count(loaded, &p2);
  CHECK(p1 == p2);
  CHECK(p1 > 0);
  ac_model_free(loaded);
  const double bad[AC_NUM_FEATURES] = {NAN, 0, 0, 0, 0};
  CHECK(ac_model_set_beta(h.model, bad) == AC_ERR_ARGUMENT);
}

TEST_CASE("train, evaluate and explain")
{
  Handles h;
  REQUIRE(ac_config_set(h.cfg, "train.epochs", "2") == AC_OK);
  int calls = 0;
  char * log = nullptr;
  REQUIRE(ac_train(
            h.model, h.cfg, h.data,
            [](size_t, double loss, double, double, void * user) {
              CHECK(std::isfinite(loss));
              ++*static_cast<int *>(user);
            },
            &calls, &log) == AC_OK);
  CHECK(calls == 2);
  CHECK(take(log).rfind("epoch,loss,accuracy,seconds\n", 0) == 0);

  ac_metrics rows[2]{};
  char * scenes = nullptr;
  REQUIRE(ac_evaluate(h.model, h.cfg, h.data, &rows[0], &scenes) == AC_OK);
  REQUIRE(ac_evaluate(nullptr, h.cfg, h.data, &rows[1], nullptr) == AC_OK);
  CHECK(take(scenes).rfind("scene,", 0) == 0);
  CHECK(rows[0].n_scenes == 6);
  CHECK(rows[0].top_ade <= rows[0].ade + 1e-12);
  CHECK(std::string(rows[1].model) == "constant-velocity");
  char * csv = nullptr;
  REQUIRE(ac_metrics_csv(rows, 2, &csv) == AC_OK);
  CHECK(take(csv).rfind("model,ade,fde,col_i,top_k,top_ade,top_fde,n_scenes\n", 0) == 0);
  char * table = nullptr;
  REQUIRE(ac_metrics_table(rows, 2, &table) == AC_OK);
  CHECK(take(table).find("Col-I") != std::string::npos);

  char *json = nullptr, *svg = nullptr;
  REQUIRE(ac_explain(h.model, h.data, 2, 8, &json, &svg) == AC_OK);
  const std::string j = take(json);
  CHECK(j.find("\"leader_follower\"") != std::string::npos);
  CHECK(take(svg).rfind("<svg", 0) == 0);
  CHECK(ac_explain(h.model, h.data, 999, 8, &json, nullptr) == AC_ERR_NOT_FOUND);
  CHECK(ac_explain(h.model, h.data, 2, 0, &json, nullptr) == AC_ERR_MISSING_FRAME);
}

TEST_CASE("utility fits and simulation")
{
  ac_config * cfg = nullptr;
  REQUIRE(ac_config_default(&cfg) == AC_OK);
  REQUIRE(ac_config_set(cfg, "sim.n_scenes", "40") == AC_OK);
  REQUIRE(ac_config_set(cfg, "sim.max_pedestrians", "12") == AC_OK);
  REQUIRE(ac_config_set(cfg, "sim.min_pedestrians", "10") == AC_OK);
  const double beta[AC_NUM_FEATURES] = {-2.0, -1.0, -1.5, 0.5, 0.5};
  ac_dataset * data = nullptr;
  ac_choice_log * log = nullptr;
  REQUIRE(ac_simulate_dcm(cfg, beta, 3, &data, &log) == AC_OK);
  std::size_t n = 0;
  ac_choice_log_size(log, &n);
  CHECK(n > 7000);
  ac_mnl_fit from_log{}, from_data{};
  REQUIRE(ac_fit_dcm_choices(log, &from_log) == AC_OK);
  REQUIRE(ac_fit_dcm_dataset(cfg, data, &from_data) == AC_OK);
  CHECK(from_log.converged);
  CHECK(from_log.observations == n);
  CHECK(from_data.observations == n);
  for (int i = 0; i < AC_NUM_FEATURES; ++i) CHECK(from_data.beta[i] == doctest::Approx(from_log.beta[i]).epsilon(1e-9));
  // Direction and occupancy are well identified even at this size.
  CHECK(std::abs(from_log.beta[0] + 2.0) < 4 * from_log.std_error[0]);
  CHECK(std::abs(from_log.beta[1] + 1.0) < 4 * from_log.std_error[1]);
  char * table = nullptr;
  REQUIRE(ac_mnl_fit_table(&from_log, &table) == AC_OK);
  CHECK(take(table).find("beta_acc") != std::string::npos);

  const std::string path = temp_path("choices.ndjson");
  REQUIRE(ac_choice_log_write(log, path.c_str()) == AC_OK);
  ac_choice_log * back = nullptr;
  REQUIRE(ac_choice_log_read(path.c_str(), &back) == AC_OK);
  ac_mnl_fit again{};
  REQUIRE(ac_fit_dcm_choices(back, &again) == AC_OK);
  for (int i = 0; i < AC_NUM_FEATURES; ++i) CHECK(again.beta[i] == from_log.beta[i]);

  ac_dataset * without = nullptr;
  REQUIRE(ac_simulate_dcm(cfg, beta, 3, &without, nullptr) == AC_OK);
  ac_dataset_free(without);
  ac_choice_log_free(back);
  ac_choice_log_free(log);
  ac_dataset_free(data);
  ac_config_free(cfg);
}

TEST_CASE("gradient check through the C interface")
{
  ac_config * cfg = nullptr;
  REQUIRE(ac_config_default(&cfg) == AC_OK);
  REQUIRE(ac_config_set(cfg, "model.embedding_dim", "8") == AC_OK);
  REQUIRE(ac_config_set(cfg, "model.pooling_dim", "8") == AC_OK);
  REQUIRE(ac_config_set(cfg, "model.hidden_dim", "8") == AC_OK);
  ac_gradcheck_result r{};
  REQUIRE(ac_gradcheck(cfg, 2, &r) == AC_OK);
  CHECK(r.passed);
  for (int g = 0; g < AC_NUM_PARAM_GROUPS; ++g) {
    CAPTURE(ac_param_group_name(g));
    CHECK(r.group_checked[g] > 0);
    CHECK(r.group_error[g] < 1e-4);
  }
  CHECK(std::string(ac_param_group_name(5)) == "beta");
  CHECK(std::string(ac_param_group_name(6)).empty());
  ac_config_free(cfg);
}
