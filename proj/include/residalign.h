// Copyright 2026 The residalign Authors
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

#ifndef RESIDALIGN_H
#define RESIDALIGN_H

#include <stddef.h>
#include <stdint.h>

#if defined(RESIDALIGN_BUILDING)
#define RA_API __attribute__((visibility("default")))
#else
#define RA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum {
  RA_OK = 0,
  RA_ERR_INTERNAL = 1,
  RA_ERR_CONFIG = 2,
  RA_ERR_VALIDATION = 3,
  RA_ERR_COMPUTE = 4
} ra_status;

typedef struct ra_matrix ra_matrix;        /* dense row-major doubles */
typedef struct ra_ridge_model ra_ridge_model;

/* Message of the last failed call on this thread; never NULL. */
RA_API const char* ra_last_error(void);
RA_API const char* ra_version(void);

RA_API ra_status ra_matrix_create(size_t rows, size_t cols, const double* data, ra_matrix** out);
RA_API ra_status ra_matrix_load(const char* npy_path, ra_matrix** out);
RA_API ra_status ra_matrix_save(const ra_matrix* m, const char* npy_path);
RA_API size_t ra_matrix_rows(const ra_matrix* m);
RA_API size_t ra_matrix_cols(const ra_matrix* m);
/* Copies rows*cols values, row-major, into `out`. */
RA_API ra_status ra_matrix_copy(const ra_matrix* m, double* out, size_t capacity);
RA_API void ra_matrix_free(ra_matrix* m);

/* Ridge with per-target penalty chosen over `lambdas` by story-blind
   chunked bootstrap; a single lambda skips the bootstrap. */
RA_API ra_status ra_ridge_fit(const ra_matrix* X, const ra_matrix* Y, const double* lambdas,
                              size_t n_lambdas, uint64_t seed, ra_ridge_model** out);
RA_API ra_status ra_ridge_predict(const ra_ridge_model* model, const ra_matrix* X, ra_matrix** out);
/* Writes one value per target. */
RA_API ra_status ra_ridge_lambdas(const ra_ridge_model* model, double* out, size_t capacity);
RA_API void ra_ridge_free(ra_ridge_model* model);

/* Residualize W on L. `train` holds n_rows flags (nonzero: train row). */
RA_API ra_status ra_remove_feature(const ra_matrix* L, const ra_matrix* W, const uint8_t* train,
                                   const double* lambdas, size_t n_lambdas, uint64_t seed,
                                   ra_matrix** residual);

/* Resample rows sampled at `times` onto `n_trs` TR centres. */
RA_API ra_status ra_lanczos_downsample(const ra_matrix* values, const double* times,
                                       size_t n_trs, double tr_seconds, ra_matrix** out);

/* alternative: 0 two-sided, 1 greater, 2 less. */
RA_API ra_status ra_wilcoxon(const double* differences, size_t n, int alternative, double* p);

/* Validate a config and the files it references. Mismatches go to
   ra_last_error with RA_ERR_VALIDATION. */
RA_API ra_status ra_config_validate(const char* config_path, const char* const* overrides,
                                    size_t n_overrides);

/* Run one pipeline stage ("synth", "features", ..., "report", "all").
   `summary_json`, when non-NULL, receives a malloc'd JSON string listing
   executed and cached nodes; release it with ra_string_free. */
RA_API ra_status ra_pipeline_run(const char* config_path, const char* stage,
                                 const char* const* overrides, size_t n_overrides, int workers,
                                 int verbose, char** summary_json);
RA_API void ra_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
