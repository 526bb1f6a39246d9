#ifndef GRAPH_UNLEARN_H
#define GRAPH_UNLEARN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GuStatus {
  GU_STATUS_OK = 0,
  GU_STATUS_NULL_POINTER = 1,
  GU_STATUS_INVALID_ARGUMENT = 2,
  GU_STATUS_PARSE = 3,
  GU_STATUS_STRUCTURE = 4,
  GU_STATUS_NODE_OUT_OF_RANGE = 5,
  GU_STATUS_DEGENERATE_GRAPH = 6,
  GU_STATUS_LABEL = 7,
  GU_STATUS_SHAPE = 8,
  GU_STATUS_NUMERICAL = 9,
  GU_STATUS_NOT_CONVERGED = 10,
  GU_STATUS_STALE_REQUEST = 11,
  GU_STATUS_REQUEST_MISMATCH = 12,
  GU_STATUS_BATCH_TOO_LARGE = 13,
  GU_STATUS_DOMINANCE_VIOLATION = 14,
  GU_STATUS_IO = 15,
  GU_STATUS_SERDE = 16,
  GU_STATUS_UNSUPPORTED = 17,
  GU_STATUS_CACHE = 18,
  GU_STATUS_BUFFER_TOO_SMALL = 19,
  GU_STATUS_PANIC = 20,
} GuStatus;

typedef enum GuFamily {
  GU_FAMILY_MONIC_CUBIC = 0,
  GU_FAMILY_ITERSINE = 1,
  GU_FAMILY_DIFFUSION = 2,
  GU_FAMILY_GEOMETRIC = 3,
} GuFamily;

typedef enum GuLoss {
  GU_LOSS_LOGISTIC = 0,
  GU_LOSS_LINEAR = 1,
} GuLoss;

typedef enum GuGuard {
  GU_GUARD_ENFORCE = 0,
  GU_GUARD_DISABLED = 1,
  GU_GUARD_ALWAYS_RETRAIN = 2,
} GuGuard;

typedef enum GuRequestKind {
  GU_REQUEST_KIND_FEATURE = 0,
  GU_REQUEST_KIND_NODE = 1,
  GU_REQUEST_KIND_GRAPH = 2,
} GuRequestKind;

typedef enum GuAction {
  GU_ACTION_NEWTON_UPDATE = 0,
  GU_ACTION_RETRAIN = 1,
} GuAction;

typedef enum GuWorstCaseKind {
  GU_WORST_CASE_KIND_FEATURE_SINGLE = 0,
  GU_WORST_CASE_KIND_NODE_SINGLE = 1,
  GU_WORST_CASE_KIND_FEATURE_BATCH = 2,
  GU_WORST_CASE_KIND_NODE_BATCH = 3,
} GuWorstCaseKind;

/**
 * Opaque dataset handle.
 */
typedef struct GuDataset GuDataset;

/**
 * Opaque unlearning engine handle.
 */
typedef struct GuUnlearner GuUnlearner;

/**
 * Scattering transform shape: wavelet family, scales J, layers L and
 * moments Q.
 */
typedef struct GuScatteringParams {
  enum GuFamily family;
  size_t scales;
  size_t layers;
  size_t moments;
} GuScatteringParams;

/**
 * Engine settings. `frame` <= 0 computes the energy constant from the
 * training graphs' frame bounds.
 */
typedef struct GuUnlearnParams {
  double lambda;
  double alpha;
  double epsilon;
  double delta;
  enum GuLoss loss;
  enum GuGuard guard;
  uint64_t seed;
  double frame;
} GuUnlearnParams;

typedef struct GuOutcome {
  enum GuAction action;
  double bound;
  double beta;
  double threshold;
  size_t retrain_count;
  double wall_ms;
} GuOutcome;

typedef struct GuWorstCaseParams {
  double gamma1;
  double gamma2;
  double c1;
  double c2;
  double lambda;
  size_t n;
  size_t g_n;
  double frame;
  size_t m;
} GuWorstCaseParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length without
 * the terminator.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t gu_last_error_message(char *buf, size_t len);

/**
 * Loads a dataset directory in the TU edge-list layout.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GuStatus gu_dataset_load(const char *path, struct GuDataset **out);

/**
 * Generates the synthetic two-class dataset.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum GuStatus gu_dataset_synthetic(size_t graphs,
                                   size_t min_nodes,
                                   size_t max_nodes,
                                   uint64_t seed,
                                   struct GuDataset **out);

/**
 * Number of graphs, 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle.
 */
size_t gu_dataset_len(const struct GuDataset *ds);

/**
 * Node count of graph `index`, 0 when out of range.
 *
 * # Safety
 * `ds` must be null or a live handle.
 */
size_t gu_dataset_node_count(const struct GuDataset *ds, size_t index);

/**
 * Replaces the split with a seeded random one.
 *
 * # Safety
 * `ds` must be a live handle.
 */
enum GuStatus gu_dataset_random_split(struct GuDataset *ds,
                                      double train,
                                      double validation,
                                      double test,
                                      uint64_t seed);

/**
 * Writes the scattering coefficients of graph `index` into `out`, which
 * must hold `len >= dimension` values.
 *
 * # Safety
 * `ds` must be a live handle and `out` valid for `len` doubles.
 */
enum GuStatus gu_embed_graph(const struct GuDataset *ds,
                             size_t index,
                             struct GuScatteringParams params,
                             double *out,
                             size_t len);

/**
 * Embedding dimension for `params`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum GuStatus gu_embedding_dim(struct GuScatteringParams params, size_t *out);

/**
 * # Safety
 * `ds` must be null or a handle not freed before.
 */
void gu_dataset_free(struct GuDataset *ds);

/**
 * Embeds the training split of `ds` and trains the initial model. The
 * engine copies what it needs; `ds` may be freed afterwards.
 *
 * # Safety
 * `ds` must be a live handle and `out` a valid pointer.
 */
enum GuStatus gu_unlearner_new(const struct GuDataset *ds,
                               struct GuScatteringParams scattering,
                               struct GuUnlearnParams params,
                               struct GuUnlearner **out);

/**
 * Serves one removal request. `node` is ignored for whole-graph requests.
 *
 * # Safety
 * `u` must be a live handle and `out` null or a valid pointer.
 */
enum GuStatus gu_unlearner_process(struct GuUnlearner *u,
                                   enum GuRequestKind kind,
                                   size_t graph,
                                   size_t node,
                                   struct GuOutcome *out);

/**
 * Number of binary models (1 for two classes, K one-vs-all otherwise).
 *
 * # Safety
 * `u` must be null or a live handle.
 */
size_t gu_unlearner_model_count(const struct GuUnlearner *u);

/**
 * Copies the weights of model `model` into `out` (`len` >= dimension).
 *
 * # Safety
 * `u` must be a live handle and `out` valid for `len` doubles.
 */
enum GuStatus gu_unlearner_weights(const struct GuUnlearner *u,
                                   size_t model,
                                   double *out,
                                   size_t len);

/**
 * Predicted class of an embedding of length `len`.
 *
 * # Safety
 * `u` must be a live handle, `z` valid for `len` doubles and `out` valid.
 */
enum GuStatus gu_unlearner_predict(const struct GuUnlearner *u,
                                   const double *z,
                                   size_t len,
                                   int64_t *out);

/**
 * # Safety
 * `u` must be null or a handle not freed before.
 */
void gu_unlearner_free(struct GuUnlearner *u);

/**
 * Closed-form worst-case residual bound.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum GuStatus gu_worst_case_bound(enum GuWorstCaseKind kind,
                                  struct GuWorstCaseParams p,
                                  double *out);

/**
 * Noise scale `sqrt(2 ln(1.5 / delta)) * per_request / epsilon`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum GuStatus gu_calibrate_noise(double epsilon, double delta, double per_request, double *out);

/**
 * Retrain threshold of the budget ledger.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum GuStatus gu_budget_threshold(double epsilon, double delta, double alpha, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRAPH_UNLEARN_H */
