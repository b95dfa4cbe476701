#ifndef SKEWSKETCH_H
#define SKEWSKETCH_H

/* Generated by cbindgen from the skewsketch-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Call outcome. Zero is success; everything else leaves outputs untouched
 * unless documented otherwise.
 */
typedef enum SksStatus {
  SKS_STATUS_OK = 0,
  SKS_STATUS_NULL_POINTER = 1,
  SKS_STATUS_INVALID_ARGUMENT = 2,
  SKS_STATUS_INCOMPATIBLE = 3,
  SKS_STATUS_CORRUPT_DATA = 4,
  SKS_STATUS_NUMERIC_FAILURE = 5,
  SKS_STATUS_BUFFER_TOO_SMALL = 6,
  SKS_STATUS_PANIC = 7,
} SksStatus;

/**
 * Estimator selector. The general-skewness diagnostic estimator is not
 * exposed here: sketches are built from fully skewed projections and
 * accept only the matching estimators.
 */
typedef enum SksMethod {
  SKS_METHOD_GM = 0,
  SKS_METHOD_HM = 1,
  SKS_METHOD_MLE05 = 2,
  SKS_METHOD_OP = 3,
} SksMethod;

/**
 * Opaque sketch handle. Create with `sks_sketch_new` or
 * `sks_sketch_deserialize`, release with `sks_sketch_free`.
 */
typedef struct SksSketch SksSketch;

/**
 * Result of `sks_sketch_estimate`. `degenerate` flags an empty sketch,
 * whose estimate is 0 by convention. `asymptotic_variance_factor` is the
 * constant V in Var ~ V/k for the chosen method at this alpha.
 */
typedef struct SksEstimate {
  double estimate;
  double alpha;
  double asymptotic_variance_factor;
  uint32_t k;
  bool degenerate;
} SksEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a sketch for the alpha-th moment with k accumulators.
 *
 * `compensated` turns on compensated accumulator summation, which keeps
 * deleted mass exact under huge transient inserts at a small cost per
 * update. On success `*out` owns the sketch; on failure `*out` is null.
 *
 * # Safety
 * `out` must be a valid pointer. `alpha` in (0, 2] except 1, `k >= 2`.
 */
enum SksStatus sks_sketch_new(double alpha,
                              uint32_t k,
                              uint64_t seed,
                              bool compensated,
                              struct SksSketch **out);

/**
 * Release a sketch. Null is a no-op. The pointer must not be used again.
 *
 * # Safety
 * `sketch` must be null or a pointer obtained from this library that has
 * not already been freed.
 */
void sks_sketch_free(struct SksSketch *sketch);

/**
 * Feed one Turnstile update (index, increment). Indices are 1-based;
 * increments may be negative (deletions) but must be finite.
 *
 * # Safety
 * `sketch` must be a live handle from this library.
 */
enum SksStatus sks_sketch_update(struct SksSketch *sketch, uint64_t index, double increment);

/**
 * Fold `src` into `dst`. Requires identical alpha, k, and seed, so both
 * sides used the same projection matrix.
 *
 * # Safety
 * Both pointers must be live handles from this library and must not
 * alias.
 */
enum SksStatus sks_sketch_merge(struct SksSketch *dst, const struct SksSketch *src);

/**
 * Number of updates folded in so far (including merged ones).
 *
 * # Safety
 * `sketch` must be a live handle; `out` must be a valid pointer.
 */
enum SksStatus sks_sketch_update_count(const struct SksSketch *sketch, uint64_t *out);

/**
 * Estimate the alpha-th frequency moment from the current accumulators.
 *
 * # Safety
 * `sketch` must be a live handle; `out` must be a valid pointer;
 * `method` must be one of the declared enum values.
 */
enum SksStatus sks_sketch_estimate(const struct SksSketch *sketch,
                                   enum SksMethod method,
                                   struct SksEstimate *out);

/**
 * Exact byte length `sks_sketch_serialize` will write for this sketch.
 *
 * # Safety
 * `sketch` must be a live handle; `out` must be a valid pointer.
 */
enum SksStatus sks_sketch_serialized_size(const struct SksSketch *sketch, size_t *out);

/**
 * Write the sketch into a caller buffer of at least
 * `sks_sketch_serialized_size` bytes. Exactly that many bytes are
 * written; the encoding round-trips bit-exactly through
 * `sks_sketch_deserialize`.
 *
 * # Safety
 * `sketch` must be a live handle; `buf` must point to `len` writable
 * bytes.
 */
enum SksStatus sks_sketch_serialize(const struct SksSketch *sketch, uint8_t *buf, size_t len);

/**
 * Reconstruct a sketch from bytes produced by `sks_sketch_serialize`.
 * On success `*out` owns the new sketch; on failure `*out` is null.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes; `out` must be a valid
 * pointer.
 */
enum SksStatus sks_sketch_deserialize(const uint8_t *bytes, size_t len, struct SksSketch **out);

/**
 * Static, NUL-terminated description of a status code. Never null; do
 * not free.
 */
const char *sks_status_message(enum SksStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKEWSKETCH_H */
