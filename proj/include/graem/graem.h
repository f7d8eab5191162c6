// Copyright 2026 The GRAEM Authors. All Rights Reserved.
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

/* C interface to the GRAEM matrix-completion engine.
 *
 * All objects are opaque handles owned by the caller and released with the
 * matching *_destroy function (NULL is accepted). Every fallible call returns
 * a graem_status; on failure graem_last_error() describes the problem for the
 * calling thread until its next failing call.
 *
 * Indices are 0-based. "side" selects the row (GRAEM_SIDE_U) or column
 * (GRAEM_SIDE_V) entity. */
#ifndef GRAEM_GRAEM_H_
#define GRAEM_GRAEM_H_

#include <stddef.h>

#if defined(GRAEM_BUILDING_LIBRARY)
#define GRAEM_API __attribute__((visibility("default")))
#else
#define GRAEM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum graem_status {
  GRAEM_OK = 0,
  GRAEM_ERR_INPUT = 1,
  GRAEM_ERR_PARSE = 2,
  GRAEM_ERR_DATA = 3,
  GRAEM_ERR_NUMERICAL = 4,
  GRAEM_ERR_CONFIG = 5,
  GRAEM_ERR_IO = 6,
  GRAEM_ERR_INTERNAL = 7,
  GRAEM_ERR_NULL_ARGUMENT = 8,
  GRAEM_ERR_NOT_AVAILABLE = 9
} graem_status;

typedef enum graem_model {
  GRAEM_MODEL_PMF = 0,
  GRAEM_MODEL_GRALS = 1,
  GRAEM_MODEL_GPMF = 2
} graem_model;

typedef enum graem_side { GRAEM_SIDE_U = 0, GRAEM_SIDE_V = 1 } graem_side;

typedef struct graem_config graem_config;
typedef struct graem_obs graem_obs;
typedef struct graem_graph graem_graph;
typedef struct graem_factors graem_factors;
typedef struct graem_result graem_result;

GRAEM_API const char* graem_last_error(void);
GRAEM_API const char* graem_status_name(graem_status status);
GRAEM_API const char* graem_version(void);

/* Configuration: training and synthetic-data settings in one flat key space. */
GRAEM_API graem_status graem_config_create(graem_config** out);
GRAEM_API void graem_config_destroy(graem_config* cfg);
GRAEM_API graem_status graem_config_set(graem_config* cfg, const char* key, const char* value);
/* Applies every `key = value` line of a file. */
GRAEM_API graem_status graem_config_load(graem_config* cfg, const char* path);
GRAEM_API graem_status graem_config_write(const graem_config* cfg, const char* path);
/* Copies the current value of `key` into buf (NUL-terminated, truncated to cap). */
GRAEM_API graem_status graem_config_get(const graem_config* cfg, const char* key, char* buf,
                                        size_t cap);

/* Observations. */
GRAEM_API graem_status graem_obs_read(const char* path, size_t index_base, graem_obs** out);
GRAEM_API graem_status graem_obs_create(size_t n_rows, size_t n_cols, size_t count,
                                        const size_t* rows, const size_t* cols,
                                        const double* values, graem_obs** out);
GRAEM_API graem_status graem_obs_write(const graem_obs* obs, const char* path);
GRAEM_API graem_status graem_obs_shape(const graem_obs* obs, size_t* n_rows, size_t* n_cols,
                                       size_t* count);
GRAEM_API void graem_obs_destroy(graem_obs* obs);

/* Side-information graphs. n_nodes = 0 takes the count from the file. */
GRAEM_API graem_status graem_graph_read(const char* path, size_t n_nodes, double gamma,
                                        size_t index_base, graem_graph** out);
GRAEM_API graem_status graem_graph_create(size_t n_nodes, size_t n_edges, const size_t* i,
                                          const size_t* j, double gamma, graem_graph** out);
GRAEM_API graem_status graem_graph_write(const graem_graph* graph, const char* path);
GRAEM_API graem_status graem_graph_info(const graem_graph* graph, size_t* n_nodes,
                                        size_t* n_edges);
/* Writes up to cap edges (i < j, sorted) into i/j; *n_edges receives the total. */
GRAEM_API graem_status graem_graph_edges(const graem_graph* graph, size_t* i, size_t* j,
                                         size_t cap, size_t* n_edges);
GRAEM_API void graem_graph_destroy(graem_graph* graph);

/* Factor pairs (U: n x d, V: m x d), row-major. */
GRAEM_API graem_status graem_factors_create(size_t n, size_t m, size_t d, const double* u,
                                            const double* v, graem_factors** out);
GRAEM_API graem_status graem_factors_read(const char* u_path, const char* v_path,
                                          graem_factors** out);
/* text != 0 selects the plain-text layout. */
GRAEM_API graem_status graem_factors_write(const graem_factors* f, const char* u_path,
                                           const char* v_path, int text);
GRAEM_API graem_status graem_factors_shape(const graem_factors* f, size_t* n, size_t* m,
                                           size_t* d);
/* Copies one side into buf, which must hold rows * d doubles. */
GRAEM_API graem_status graem_factors_copy(const graem_factors* f, graem_side side, double* buf,
                                          size_t cap);
GRAEM_API void graem_factors_destroy(graem_factors* f);

GRAEM_API graem_status graem_rmse(const graem_factors* f, const graem_obs* obs, double* rmse);

/* Training. Graphs are optional for GPMF (a side without a graph keeps an l2
 * prior); GRALS needs at least one; PMF ignores them. heldout may be NULL. */
GRAEM_API graem_status graem_train(const graem_config* cfg, graem_model model,
                                   const graem_obs* train, const graem_graph* graph_u,
                                   const graem_graph* graph_v, const graem_obs* heldout,
                                   graem_result** out);

/* One contested-edge update of `graph` from fixed factors. */
GRAEM_API graem_status graem_prune(const graem_config* cfg, const graem_factors* f,
                                   const graem_obs* obs, graem_side side,
                                   const graem_graph* graph, graem_result** out);

GRAEM_API graem_status graem_result_factors(const graem_result* r, graem_factors** out);
/* GRAEM_ERR_NOT_AVAILABLE when the run did not update that side. */
GRAEM_API graem_status graem_result_graph(const graem_result* r, graem_side side,
                                          graem_graph** out);
GRAEM_API graem_status graem_result_edge_counts(const graem_result* r, graem_side side,
                                                size_t* kept, size_t* removed_contested);
GRAEM_API graem_status graem_result_write_report(const graem_result* r, graem_side side,
                                                 const char* path);
GRAEM_API graem_status graem_result_write_summary(const graem_result* r,
                                                  const graem_config* cfg, const char* path);
/* Copies up to cap entries; *len receives the full trace length. */
GRAEM_API graem_status graem_result_rmse_trace(const graem_result* r, double* buf, size_t cap,
                                               size_t* len);
GRAEM_API void graem_result_destroy(graem_result* r);

/* Writes a synthetic bundle into out_dir (created if missing): train.txt,
 * valid.txt, graph_u.txt, graph_v.txt, graph_u_true.txt, graph_v_true.txt,
 * corrupted_u.txt, corrupted_v.txt, u_true.fac, v_true.fac, config.txt. */
GRAEM_API graem_status graem_synth(const graem_config* cfg, const char* out_dir);

/* axis: fidelity | sigma2_obs | frac_observed | d. models: comma-separated
 * subset of pmf,grals,grals-true-graph,gpmf, or NULL for all. threads = 0
 * uses every hardware thread. summary_path may be NULL. */
GRAEM_API graem_status graem_sweep(const graem_config* cfg, const char* axis,
                                   const double* values, size_t n_values, size_t repeats,
                                   const char* models, size_t threads, const char* csv_path,
                                   const char* summary_path);

#ifdef __cplusplus
}
#endif

#endif /* GRAEM_GRAEM_H_ */
