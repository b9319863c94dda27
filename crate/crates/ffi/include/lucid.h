#ifndef LUCID_H
#define LUCID_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Role codes accepted by [`lucid_score_response`].
 */
#define LUCID_ROLE_ANALYSIS 0

#define LUCID_ROLE_FEEDBACK 1

#define LUCID_ROLE_PREDICTOR 2

#define LUCID_ROLE_OPTIMIZER 3

/*
 Result code of every fallible call.
 */
typedef enum LucidStatus {
  LUCID_STATUS_OK = 0,
  LUCID_STATUS_NULL_POINTER = 1,
  LUCID_STATUS_INVALID_UTF8 = 2,
  LUCID_STATUS_INVALID_ARGUMENT = 3,
  LUCID_STATUS_IO = 4,
  LUCID_STATUS_PARSE = 5,
  LUCID_STATUS_BACKEND = 6,
  LUCID_STATUS_DOMAIN = 7,
  LUCID_STATUS_PANIC = 99,
} LucidStatus;

/*
 Preprocessed records of one CSV file.
 */
typedef struct LucidDataset LucidDataset;

/*
 A finished run.
 */
typedef struct LucidRun LucidRun;

/*
 Score components of one response.
 */
typedef struct LucidScore {
  double base;
  double bonus;
  double penalty;
  double boost;
  double raw;
  double clamped;
} LucidScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. Valid until the
 next call into this library on the same thread.
 */
const char *lucid_last_error_message(void);

/*
 # Safety
 `s` must be null or a string returned by this library and not yet freed.
 */
void lucid_string_free(char *s);

/*
 Learning boost at `epoch` under the default constants.
 */
double lucid_learning_boost(uint64_t epoch);

/*
 Scores `text` for `role` against `history_len` earlier responses of the
 same role, under the default constants.

 # Safety
 `text` must be a NUL-terminated string; `history` must point to
 `history_len` NUL-terminated strings (or be null when the length is 0);
 `out` must be writable.
 */
enum LucidStatus lucid_score_response(uint32_t role_code,
                                      const char *text,
                                      const char *const *history,
                                      size_t history_len,
                                      uint64_t epoch,
                                      struct LucidScore *out);

/*
 Share of `len` responses that repeat an earlier one.

 # Safety
 `responses` must point to `len` NUL-terminated strings; `out` must be writable.
 */
enum LucidStatus lucid_redundancy_rate(const char *const *responses, size_t len, double *out);

/*
 Cluster labels (`-1` for noise) for `n` points given as separate x and y arrays.

 # Safety
 `xs`, `ys` must hold `n` values and `labels` must have room for `n`.
 */
enum LucidStatus lucid_dbscan(const double *xs,
                              const double *ys,
                              size_t n,
                              double eps,
                              size_t min_pts,
                              int64_t *labels);

/*
 Mean distance from each of `n` points to its `k` nearest others.

 # Safety
 `xs`, `ys` must hold `n` values and `out` must have room for `n`.
 */
enum LucidStatus lucid_knn_relation(const double *xs,
                                    const double *ys,
                                    size_t n,
                                    size_t k,
                                    double *out);

/*
 Min-max scales `n` values into `[0, 1]`.

 # Safety
 `values` must hold `n` values and `out` must have room for `n`.
 */
enum LucidStatus lucid_min_max_scale(const double *values, size_t n, double *out);

/*
 Loads, imputes and feature-engineers a crime CSV with default pipeline settings.

 # Safety
 `path` must be a NUL-terminated string and `out` writable. On success
 `*out` owns a handle to release with [`lucid_dataset_free`].
 */
enum LucidStatus lucid_dataset_load(const char *path, struct LucidDataset **out);

/*
 Number of records, or 0 for a null handle.

 # Safety
 `dataset` must be null or a live handle.
 */
size_t lucid_dataset_len(const struct LucidDataset *dataset);

/*
 Number of spatial clusters, or 0 for a null handle.

 # Safety
 `dataset` must be null or a live handle.
 */
size_t lucid_dataset_cluster_count(const struct LucidDataset *dataset);

/*
 Writes the clean records as CSV.

 # Safety
 `dataset` must be a live handle and `path` a NUL-terminated string.
 */
enum LucidStatus lucid_dataset_write_csv(const struct LucidDataset *dataset, const char *path);

/*
 # Safety
 `dataset` must be null or a handle from [`lucid_dataset_load`] not yet freed.
 */
void lucid_dataset_free(struct LucidDataset *dataset);

/*
 Runs an experiment described by a JSON run configuration and writes its
 artifacts to the configured output directory.

 # Safety
 `config_json` must be a NUL-terminated string and `out` writable. On
 success `*out` owns a handle to release with [`lucid_run_free`].
 */
enum LucidStatus lucid_run_experiment(const char *config_json, struct LucidRun **out);

/*
 Number of transcript messages, or 0 for a null handle.

 # Safety
 `run` must be null or a live handle.
 */
size_t lucid_run_message_count(const struct LucidRun *run);

/*
 Run summary as JSON; free with [`lucid_string_free`]. Null for a null handle.

 # Safety
 `run` must be null or a live handle.
 */
char *lucid_run_summary_json(const struct LucidRun *run);

/*
 Per-message score table as CSV; free with [`lucid_string_free`]. Null for a null handle.

 # Safety
 `run` must be null or a live handle.
 */
char *lucid_run_scores_csv(const struct LucidRun *run);

/*
 # Safety
 `run` must be null or a handle from [`lucid_run_experiment`] not yet freed.
 */
void lucid_run_free(struct LucidRun *run);

/*
 Runs both ablation arms and returns the report as JSON through `out_json`
 (free with [`lucid_string_free`]).

 # Safety
 `config_json` must be a NUL-terminated string and `out_json` writable.
 */
enum LucidStatus lucid_run_ablation(const char *config_json, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LUCID_H */
