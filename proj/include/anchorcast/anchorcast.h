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

#ifndef ANCHORCAST__ANCHORCAST_H_
#define ANCHORCAST__ANCHORCAST_H_

/*
 * C interface of the anchorcast trajectory forecaster.
 *
 * Objects are opaque handles created by the library and released with the
 * matching *_free function. Every fallible call returns an ac_status; on
 * failure a human-readable message is available from ac_last_error() on the
 * calling thread until the next failing call. Strings returned through
 * char** out-parameters are owned by the caller and freed with
 * ac_string_free().
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(ANCHORCAST_BUILDING_LIBRARY)
#    define AC_API __declspec(dllexport)
#  else
#    define AC_API __declspec(dllimport)
#  endif
#else
#  define AC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values 2 and 3 double as the command-line exit codes. */
typedef enum ac_status {
  AC_OK = 0,
  AC_ERR_VALIDATION = 2,
  AC_ERR_NUMERIC = 3,
  AC_ERR_IO = 4,
  AC_ERR_MISSING_FRAME = 5,
  AC_ERR_NOT_FOUND = 6,
  AC_ERR_ARGUMENT = 7,
  AC_ERR_INTERNAL = 99
} ac_status;

typedef struct ac_config ac_config;
typedef struct ac_dataset ac_dataset;
typedef struct ac_choice_log ac_choice_log;
typedef struct ac_model ac_model;

#define AC_NUM_FEATURES 5
#define AC_NUM_PARAM_GROUPS 6

AC_API const char * ac_version(void);
AC_API const char * ac_last_error(void);
AC_API void ac_string_free(char * s);

/* ---- configuration ---------------------------------------------------- */

AC_API ac_status ac_config_default(ac_config ** out);
AC_API ac_status ac_config_parse(const char * json, ac_config ** out);
AC_API ac_status ac_config_load(const char * path, ac_config ** out);
/* Overrides one existing key, e.g. ("train.epochs", "3"). The value is JSON. */
AC_API ac_status ac_config_set(ac_config * cfg, const char * key_path, const char * json_value);
/* Current value of one key as JSON text, e.g. "train.seed" -> "42". */
AC_API ac_status ac_config_get(const ac_config * cfg, const char * key_path, char ** json_value);
AC_API ac_status ac_config_to_json(const ac_config * cfg, char ** out);
AC_API void ac_config_free(ac_config * cfg);

/* ---- datasets --------------------------------------------------------- */

AC_API ac_status ac_dataset_read(const char * path, ac_dataset ** out);
/* Writes the ndjson file. With a non-null cfg a manifest (counts, seeds,
 * config echo) is written next to it as <stem>.manifest.json. */
AC_API ac_status ac_dataset_write(
  const ac_dataset * data, const char * path, const ac_config * cfg, const char * generator);
AC_API ac_status ac_dataset_size(const ac_dataset * data, size_t * n_scenes);
/* First round(fraction * n) scenes go to *first, the rest to *second. */
AC_API ac_status ac_dataset_split(
  const ac_dataset * data, double fraction, ac_dataset ** first, ac_dataset ** second);
AC_API void ac_dataset_free(ac_dataset * data);

/* Social-force circle crossing, sized and seeded by the "sim" section. */
AC_API ac_status ac_generate(const ac_config * cfg, ac_dataset ** out);

/* Logit-sampling agents with the given beta (dir, occ, col, acc, dec).
 * Pass log = NULL to skip the choice log. */
AC_API ac_status ac_simulate_dcm(
  const ac_config * cfg, const double beta[AC_NUM_FEATURES], uint64_t seed, ac_dataset ** data,
  ac_choice_log ** log);

AC_API ac_status ac_choice_log_read(const char * path, ac_choice_log ** out);
AC_API ac_status ac_choice_log_write(const ac_choice_log * log, const char * path);
AC_API ac_status ac_choice_log_size(const ac_choice_log * log, size_t * n_choices);
AC_API void ac_choice_log_free(ac_choice_log * log);

/* ---- models ----------------------------------------------------------- */

/* Fresh model with seeded random weights and zero beta. */
AC_API ac_status ac_model_create(const ac_config * cfg, uint64_t seed, ac_model ** out);
AC_API ac_status ac_model_load(const char * path, ac_model ** out);
AC_API ac_status ac_model_save(const ac_model * model, const char * path);
AC_API ac_status ac_model_param_count(const ac_model * model, size_t * n);
AC_API ac_status ac_model_get_beta(const ac_model * model, double beta[AC_NUM_FEATURES]);
AC_API ac_status ac_model_set_beta(ac_model * model, const double beta[AC_NUM_FEATURES]);
/* Zeroes every network weight so only the utility (beta) scores anchors. */
AC_API ac_status ac_model_zero_network(ac_model * model);
AC_API void ac_model_free(ac_model * model);

/* ---- training --------------------------------------------------------- */

typedef void (*ac_epoch_callback)(size_t epoch, double loss, double accuracy, double seconds, void * user);

/* Trains in place using the "train" section. *log_csv (optional) receives
 * the per-epoch log as CSV. */
AC_API ac_status ac_train(
  ac_model * model, const ac_config * cfg, const ac_dataset * data, ac_epoch_callback on_epoch, void * user,
  char ** log_csv);

typedef struct ac_mnl_fit {
  double beta[AC_NUM_FEATURES];
  double std_error[AC_NUM_FEATURES];
  double log_likelihood;
  size_t iterations;
  size_t observations;
  int converged;
} ac_mnl_fit;

/* Utility-only maximum likelihood with standard errors from the inverse
 * observed information. */
AC_API ac_status ac_fit_dcm_choices(const ac_choice_log * log, ac_mnl_fit * out);
/* Same, from the observed moves of every pedestrian in a dataset. */
AC_API ac_status ac_fit_dcm_dataset(const ac_config * cfg, const ac_dataset * data, ac_mnl_fit * out);
AC_API ac_status ac_mnl_fit_table(const ac_mnl_fit * fit, char ** out);

/* ---- evaluation ------------------------------------------------------- */

typedef struct ac_metrics {
  char model[64];
  double ade;
  double fde;
  double col_i; /* percent */
  double top_ade;
  double top_fde;
  size_t top_k;
  size_t n_scenes;
} ac_metrics;

/* A null model evaluates the constant-velocity baseline. *scene_csv
 * (optional) receives the per-scene breakdown. */
AC_API ac_status ac_evaluate(
  const ac_model * model, const ac_config * cfg, const ac_dataset * data, ac_metrics * out, char ** scene_csv);
AC_API ac_status ac_metrics_csv(const ac_metrics * rows, size_t n, char ** out);
AC_API ac_status ac_metrics_table(const ac_metrics * rows, size_t n, char ** out);

/* Score decomposition of the primary pedestrian of a scene at step t.
 * Either output may be null. */
AC_API ac_status ac_explain(
  const ac_model * model, const ac_dataset * data, int64_t scene_id, int step, char ** json, char ** svg);

typedef struct ac_gradcheck_result {
  double max_rel_error;
  double group_error[AC_NUM_PARAM_GROUPS];
  size_t group_checked[AC_NUM_PARAM_GROUPS];
  int passed;
} ac_gradcheck_result;

AC_API const char * ac_param_group_name(int group);

/* Finite-difference check of the training gradient on a small fixture
 * scene; seed drives the model, the scene and the slice choice. */
AC_API ac_status ac_gradcheck(const ac_config * cfg, uint64_t seed, ac_gradcheck_result * out);

#ifdef __cplusplus
}
#endif

#endif /* ANCHORCAST__ANCHORCAST_H_ */
