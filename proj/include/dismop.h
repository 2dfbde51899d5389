// Copyright 2026 The DISMOP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DISMOP_H_
#define DISMOP_H_

#include <stddef.h>
#include <stdint.h>

#if defined(DISMOP_BUILDING_LIBRARY)
#define DISMOP_API __attribute__((visibility("default")))
#else
#define DISMOP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Non-zero values match the library's error kinds; the name of a
 * code is available from dismop_status_name(). */
typedef enum {
  DISMOP_OK = 0,
  DISMOP_ERR_INVALID_ARGUMENT = 1,
  DISMOP_ERR_IO = 2,
  DISMOP_ERR_PARSE_ERROR = 3,
  DISMOP_ERR_SCHEMA_VERSION_MISMATCH = 4,
  DISMOP_ERR_DUPLICATE_SESSION_ID = 5,
  DISMOP_ERR_INVALID_CONFIG = 6,
  DISMOP_ERR_TOO_FEW_SESSIONS = 7,
  DISMOP_ERR_EMPTY_TEXT = 8,
  DISMOP_ERR_ZERO_NORM = 9,
  DISMOP_ERR_DIM_MISMATCH = 10,
  DISMOP_ERR_WRONG_ITEM_COUNT = 11,
  DISMOP_ERR_SCALE_IMBALANCE = 12,
  DISMOP_ERR_INVALID_SIGN = 13,
  DISMOP_ERR_NON_FINITE_SCORE = 14,
  DISMOP_ERR_TOPIC_WITHOUT_SUPPORT = 15,
  DISMOP_ERR_INSUFFICIENT_COMPONENTS = 16,
  DISMOP_ERR_UNKNOWN_TOPIC = 17,
  DISMOP_ERR_UNLABELED_TURN = 18,
  DISMOP_ERR_EMPTY_DATASET = 19,
  DISMOP_ERR_NON_FINITE_INPUT = 20,
  DISMOP_ERR_STALE_CACHE = 21,
  DISMOP_ERR_SHAPE_MISMATCH = 22,
  DISMOP_ERR_ARCHITECTURE_MISMATCH = 23,
  DISMOP_ERR_NON_FINITE_LOSS = 24,
  DISMOP_ERR_LATENT_DIM_MISMATCH = 25,
  DISMOP_ERR_CORRUPT_CHECKPOINT = 26,
  DISMOP_ERR_PROVENANCE_MISMATCH = 27,
  DISMOP_ERR_DEGENERATE_DATA = 28,
  DISMOP_ERR_EMPTY_TEST_SET = 29,
  DISMOP_ERR_UNSUPPORTED_FORMAT = 30,
  DISMOP_ERR_MISSING_CELL = 31,
  DISMOP_ERR_UNKNOWN_POLICY = 32,
  DISMOP_ERR_UNKNOWN_SESSION = 33,
  DISMOP_ERR_BAD_INDEX = 34,
  DISMOP_ERR_BAD_RATING = 35,
  DISMOP_ERR_NOT_FOUND = 36,
  DISMOP_ERR_INTERNAL = 255
} dismop_status;

typedef struct dismop_corpus dismop_corpus;
typedef struct dismop_service dismop_service;

/* Message of the last failure on the calling thread; valid until the next call. */
DISMOP_API const char* dismop_last_error(void);
DISMOP_API const char* dismop_status_name(int status);
/* Frees strings returned through char** out-parameters. */
DISMOP_API void dismop_string_free(char* s);

/* --- Corpora ------------------------------------------------------------- */

DISMOP_API int dismop_corpus_load(const char* path, dismop_corpus** out);
/* config_json: synthetic generator settings. */
DISMOP_API int dismop_corpus_generate(const char* config_json, dismop_corpus** out);
DISMOP_API int dismop_corpus_save(const dismop_corpus* corpus, const char* path);
DISMOP_API int dismop_corpus_split(const dismop_corpus* corpus, double train_fraction,
                                   uint64_t seed, dismop_corpus** train, dismop_corpus** test);
/* Converts a service sessions.jsonl event log into a transcript corpus. */
DISMOP_API int dismop_corpus_from_session_log(const char* path, dismop_corpus** out);
DISMOP_API size_t dismop_corpus_size(const dismop_corpus* corpus);
DISMOP_API void dismop_corpus_free(dismop_corpus* corpus);

/* --- Training and evaluation ----------------------------------------------
 * options_json keys: "pipeline" (pipeline config object), "agent", "reward",
 * "disorder", "seed", "feedback" (path of a feedback log whose ratings
 * replace rewards), "sessions" (path of a service session log whose sessions
 * are added to the training set), "strict_provenance". Reports are JSON. */

DISMOP_API int dismop_train(const dismop_corpus* train, const char* options_json,
                            const char* out_path, char** report_json);
/* Writes one "<policy>.json" checkpoint per grid cell into out_dir. */
DISMOP_API int dismop_train_grid(const dismop_corpus* train, const char* options_json,
                                 const char* out_dir, char** report_json);
/* Evaluates every checkpoint in grid_dir; returns the CSV and markdown tables. */
DISMOP_API int dismop_eval_grid(const char* grid_dir, const dismop_corpus* test,
                                const char* options_json, char** csv, char** markdown);
/* Evaluates one checkpoint; the report has accuracy, confusion and recalls. */
DISMOP_API int dismop_eval(const char* ckpt_path, const dismop_corpus* test,
                           const char* options_json, char** report_json);
/* format: "json" or "csv". The PCA is fit on pca_source's ground-truth
 * actions (pass NULL to reuse the test corpus). */
DISMOP_API int dismop_interpret(const char* ckpt_path, const dismop_corpus* test,
                                const dismop_corpus* pca_source, const char* options_json,
                                const char* format, char** trajectory, char** matrix);

/* --- Live service -------------------------------------------------------- */

DISMOP_API int dismop_service_create(const char* config_json, dismop_service** out);
/* Routes one HTTP API request. On DISMOP_OK, *http_status and *response_json
 * describe the reply, including 4xx replies for bad requests. */
DISMOP_API int dismop_service_handle(dismop_service* service, const char* method,
                                     const char* path, const char* body, int* http_status,
                                     char** response_json);
DISMOP_API void dismop_service_free(dismop_service* service);

#ifdef __cplusplus
}
#endif

#endif /* DISMOP_H_ */
