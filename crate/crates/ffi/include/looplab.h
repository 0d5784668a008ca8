#ifndef LOOPLAB_H
#define LOOPLAB_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum LlStatus {
  LL_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  LL_STATUS_NULL_POINTER = 1,
  /**
   * An argument is out of range or not valid UTF-8.
   */
  LL_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The configuration or checkpoint is inconsistent.
   */
  LL_STATUS_CONFIG_ERROR = 3,
  /**
   * Missing, malformed or mismatched data.
   */
  LL_STATUS_DATA_ERROR = 4,
  /**
   * Non-finite values or a failed numerical routine.
   */
  LL_STATUS_NUMERIC_ERROR = 5,
  /**
   * A Rust panic was caught.
   */
  LL_STATUS_PANIC = 6,
} LlStatus;

typedef enum LlCorrelation {
  LL_CORRELATION_PEARSON = 0,
  LL_CORRELATION_SPEARMAN = 1,
} LlCorrelation;

/**
 * Opaque dataset handle.
 */
typedef struct LlDataset LlDataset;

/**
 * Opaque evaluator handle.
 */
typedef struct LlEvaluator LlEvaluator;

typedef struct LlDatasetInfo {
  size_t num_pairs;
  size_t num_chunks;
  size_t steps;
  size_t dim;
  size_t max_len;
} LlDatasetInfo;

typedef struct LlEvaluatorInfo {
  bool is_pairwise;
  size_t d_in;
  size_t num_parameters;
} LlEvaluatorInfo;

/**
 * Flip-test summary. `correlation` is NaN when undefined.
 */
typedef struct LlFlipSummary {
  size_t n;
  size_t ties;
  double sign_flip_rate;
  double correlation;
  double mean_sum;
  double normal_min;
  double normal_max;
  double flipped_min;
  double flipped_max;
  bool constant_output;
  bool order_insensitive;
  bool degenerate;
} LlFlipSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ll_version(void);

/**
 * Length in bytes of the calling thread's last error message (0 if none).
 */
size_t ll_last_error_length(void);

/**
 * Copies the last error message into `buf` (NUL-terminated, truncated to
 * `cap - 1` bytes) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
size_t ll_last_error_message(char *buf, size_t cap);

/**
 * Learning rate at `step` of a linear-warmup cosine schedule.
 */
double ll_cosine_warmup_lr(uint64_t step,
                           uint64_t total_steps,
                           uint64_t warmup_steps,
                           double lr_max,
                           double lr_min);

/**
 * Opens a chunked dataset directory.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum LlStatus ll_dataset_open(const char *path, struct LlDataset **out_handle);

/**
 * Releases a dataset handle. Null is ignored.
 *
 * # Safety
 * `handle` must come from [`ll_dataset_open`] and not be used afterwards.
 */
void ll_dataset_free(struct LlDataset *handle);

/**
 * # Safety
 * Pointers must be valid.
 */
enum LlStatus ll_dataset_info(const struct LlDataset *handle, struct LlDatasetInfo *info);

/**
 * Reads and checks every chunk; writes the pair count.
 *
 * # Safety
 * Pointers must be valid; `num_pairs` may be null.
 */
enum LlStatus ll_dataset_validate(const struct LlDataset *handle, size_t *num_pairs);

/**
 * Loads a checkpoint (`.json` next to its `.params`).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum LlStatus ll_evaluator_load(const char *path, struct LlEvaluator **out_handle);

/**
 * Releases an evaluator handle. Null is ignored.
 *
 * # Safety
 * `handle` must come from [`ll_evaluator_load`] and not be used afterwards.
 */
void ll_evaluator_free(struct LlEvaluator *handle);

/**
 * # Safety
 * Pointers must be valid.
 */
enum LlStatus ll_evaluator_info(const struct LlEvaluator *handle, struct LlEvaluatorInfo *info);

/**
 * Preference score of pair `index` of a dataset; positive favours the
 * first response. With `swapped` the rejected response goes first.
 *
 * # Safety
 * Pointers must be valid.
 */
enum LlStatus ll_evaluator_score_pair(const struct LlEvaluator *evaluator,
                                      const struct LlDataset *dataset,
                                      size_t index,
                                      bool swapped,
                                      double *score);

/**
 * Preference score of two responses given as `[steps, seq_len, dim]`
 * row-major `f32` states and left-padded 0/1 masks of length `seq_len`.
 * States are rounded to half precision, as in the chunk format.
 *
 * # Safety
 * State arrays must hold `steps * seq_len * dim` floats and masks
 * `seq_len` bytes.
 */
enum LlStatus ll_evaluator_score_states(const struct LlEvaluator *evaluator,
                                        size_t steps,
                                        size_t seq_len,
                                        size_t dim,
                                        const float *first_states,
                                        const uint8_t *first_mask,
                                        const float *second_states,
                                        const uint8_t *second_mask,
                                        double *score);

/**
 * Flip test of a pairwise evaluator over a whole dataset.
 *
 * # Safety
 * Pointers must be valid.
 */
enum LlStatus ll_flip_test(const struct LlEvaluator *evaluator,
                           const struct LlDataset *dataset,
                           enum LlCorrelation correlation,
                           struct LlFlipSummary *summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOOPLAB_H */
