#ifndef GRAPHKM_H
#define GRAPHKM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GkmAlgorithm {
  GKM_ALGORITHM_STD = 0,
  GKM_ALGORITHM_ELKAN = 1,
} GkmAlgorithm;

typedef enum GkmMatcher {
  // Exact up to `exact_max_order`, graduated assignment above.
  GKM_MATCHER_AUTO = 0,
  GKM_MATCHER_EXACT = 1,
  GKM_MATCHER_GRADUATED_ASSIGNMENT = 2,
} GkmMatcher;

typedef enum GkmStatus {
  GKM_STATUS_OK = 0,
  GKM_STATUS_NULL_POINTER = 1,
  GKM_STATUS_INVALID_UTF8 = 2,
  GKM_STATUS_CONFIG = 3,
  GKM_STATUS_PARSE = 4,
  GKM_STATUS_SCALE_GUARD = 5,
  GKM_STATUS_IO = 6,
  GKM_STATUS_OUT_OF_RANGE = 7,
  GKM_STATUS_PANIC = 8,
  GKM_STATUS_OTHER = 9,
} GkmStatus;

// Loaded dataset.
typedef struct GkmDataset GkmDataset;

// Best clustering run.
typedef struct GkmResult GkmResult;

typedef struct GkmClusterOptions {
  size_t k;
  enum GkmAlgorithm algorithm;
  enum GkmMatcher matcher;
  size_t exact_max_order;
  uint64_t seed;
  size_t runs;
  size_t max_iters;
  size_t no_improve_limit;
} GkmClusterOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until
// the next failing call on the same thread.
const char *gkm_last_error_message(void);

// Library version as a static string.
const char *gkm_version(void);

// # Safety
// `path` must be a nul-terminated string and `out` a valid pointer.
enum GkmStatus gkm_dataset_load(const char *path, struct GkmDataset **out);

// Parses a dataset held in memory.
//
// # Safety
// `text` must be a nul-terminated string and `out` a valid pointer.
enum GkmStatus gkm_dataset_parse(const char *text, struct GkmDataset **out);

// # Safety
// `dataset` must come from this library and not be freed yet; null is
// ignored.
void gkm_dataset_free(struct GkmDataset *dataset);

// Number of graphs, or 0 for null.
//
// # Safety
// `dataset` must be null or a live handle.
size_t gkm_dataset_len(const struct GkmDataset *dataset);

// Largest graph order, or 0 for null.
//
// # Safety
// `dataset` must be null or a live handle.
size_t gkm_dataset_max_order(const struct GkmDataset *dataset);

// Graph distance between graphs `i` and `j`, padded to the dataset's
// largest order.
//
// # Safety
// `dataset` must be a live handle and `out` a valid pointer.
enum GkmStatus gkm_distance(const struct GkmDataset *dataset,
                            size_t i,
                            size_t j,
                            enum GkmMatcher matcher,
                            size_t exact_max_order,
                            double *out);

// Defaults: elkan, automatic matcher with exact limit 10, seed 0, one
// run, 100 iterations, stop after 3 without improvement.
struct GkmClusterOptions gkm_cluster_options_default(size_t k);

// Clusters the dataset and stores the best of `runs` runs in `out`.
//
// # Safety
// `dataset` and `options` must be valid, `out` a valid pointer.
enum GkmStatus gkm_cluster(const struct GkmDataset *dataset,
                           const struct GkmClusterOptions *options,
                           struct GkmResult **out);

// # Safety
// `result` must come from this library and not be freed yet; null is
// ignored.
void gkm_result_free(struct GkmResult *result);

// Number of clustered patterns, or 0 for null.
//
// # Safety
// `result` must be null or a live handle.
size_t gkm_result_len(const struct GkmResult *result);

// Number of clusters, or 0 for null.
//
// # Safety
// `result` must be null or a live handle.
size_t gkm_result_k(const struct GkmResult *result);

// Objective of the best state, NaN for null.
//
// # Safety
// `result` must be null or a live handle.
double gkm_result_objective(const struct GkmResult *result);

// Iterations executed, or 0 for null.
//
// # Safety
// `result` must be null or a live handle.
size_t gkm_result_iterations(const struct GkmResult *result);

// Total graph distance computations, or 0 for null.
//
// # Safety
// `result` must be null or a live handle.
uint64_t gkm_result_matchings(const struct GkmResult *result);

// Copies the cluster index of every pattern into `buf`, which must hold
// at least [`gkm_result_len`] entries.
//
// # Safety
// `result` must be a live handle and `buf` valid for `len` writes.
enum GkmStatus gkm_result_assignment(const struct GkmResult *result, size_t *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRAPHKM_H */
