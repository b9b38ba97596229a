#ifndef AGGLAB_H
#define AGGLAB_H

/* Generated by cbindgen from agglab-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call in this interface.
 */
typedef enum AgglabStatus {
  /**
   * Success; out-pointers hold the results.
   */
  AGGLAB_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  AGGLAB_STATUS_NULL_ARGUMENT = 1,
  /**
   * Arguments were structurally invalid (bad JSON, empty weights, ...).
   */
  AGGLAB_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A size, degree, or budget fell outside the supported range.
   */
  AGGLAB_STATUS_OUT_OF_RANGE = 3,
  /**
   * The solver failed or one of its self-checks rejected the result.
   */
  AGGLAB_STATUS_SOLVER_FAILURE = 4,
  /**
   * An output buffer was smaller than the reported required length.
   */
  AGGLAB_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * Internal invariant violation (caught panic). Please report.
   */
  AGGLAB_STATUS_INTERNAL = 6,
} AgglabStatus;

/**
 * Opaque handle: one solved minimax instance with its certificate.
 */
typedef struct AgglabMinimax AgglabMinimax;

/**
 * Opaque handle: a variance profile over subsets of agents.
 */
typedef struct AgglabModel AgglabModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to `cap` bytes, and returns the full
 * message length in bytes (excluding the NUL). With a null `buf` or zero
 * `cap`, nothing is written and only the length is returned. The message is
 * meaningful only after a non-OK status on the same thread.
 *
 * # Safety
 * A non-null `buf` must point to `cap` writable bytes.
 */
size_t agglab_last_error(char *buf, size_t cap);

/**
 * Writes the interval minimax level `2 / (q^d + q^-d)` with
 * `q = (sqrt(n) + 1) / (sqrt(n) - 1)` to `out`. Requires `n >= 2`, `d >= 1`.
 *
 * # Safety
 * `out` must be valid for writing one double.
 */
enum AgglabStatus agglab_closed_form_value(size_t n, size_t d, double *out);

/**
 * Writes the closed-form sandwich on the squared worst-case error of the
 * best depth-`d` rule among `n` agents: `lower <= optimum^2 <= upper`.
 *
 * # Safety
 * `lower` and `upper` must each be valid for writing one double.
 */
enum AgglabStatus agglab_error_bounds(size_t n, size_t d, double *lower, double *upper);

/**
 * Writes the exact worst-case normalized error of the randomized `d`-query
 * difference rule, `1 - d/n`. Requires `1 <= d < n <= 16`.
 *
 * # Safety
 * `out` must be valid for writing one double.
 */
enum AgglabStatus agglab_randomized_worst_error(size_t n, size_t d, double *out);

/**
 * Worst-case normalized error of the size-symmetric intersection rule whose
 * weight on every size-`k` subset is `betas[k-1]`, over all `n`-agent
 * variance profiles. `betas` holds `len >= 1` finite values; `n <= 24`.
 *
 * # Safety
 * `betas` must point to `len` readable doubles; `out` must be valid for
 * writing one double.
 */
enum AgglabStatus agglab_symmetric_worst_error(size_t n,
                                               const double *betas,
                                               size_t len,
                                               double *out);

/**
 * Solves the degree-`d` minimax problem on the integer grid `{1, ..., n}`
 * and stores a handle to the certified result in `out`. Requires
 * `2 <= n <= 2000` and `1 <= d <= min(n - 1, 30)`. Free with
 * `agglab_minimax_free`.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum AgglabStatus agglab_minimax_solve(size_t n, size_t d, struct AgglabMinimax **out);

/**
 * Releases a solve handle. Null is a no-op.
 *
 * # Safety
 * A non-null `handle` must come from `agglab_minimax_solve` and must not be
 * used (or freed) again afterwards.
 */
void agglab_minimax_free(struct AgglabMinimax *handle);

/**
 * Writes the optimal level (the un-squared minimax value) to `out`.
 *
 * # Safety
 * `handle` must be a live result from `agglab_minimax_solve`; `out` must be
 * valid for writing one double.
 */
enum AgglabStatus agglab_minimax_value(const struct AgglabMinimax *handle, double *out);

/**
 * Evaluates the optimal polynomial at `t` (numerically stable on `[0, n]`)
 * and writes the value to `out`.
 *
 * # Safety
 * `handle` must be a live result from `agglab_minimax_solve`; `out` must be
 * valid for writing one double.
 */
enum AgglabStatus agglab_minimax_eval(const struct AgglabMinimax *handle, double t, double *out);

/**
 * Writes the optimal polynomial's coefficient count (`d + 1`) to `out`.
 *
 * # Safety
 * `handle` must be a live result from `agglab_minimax_solve`; `out` must be
 * valid for writing one `size_t`.
 */
enum AgglabStatus agglab_minimax_poly_len(const struct AgglabMinimax *handle, size_t *out);

/**
 * Copies the optimal polynomial's monomial coefficients, constant term
 * first (always exactly 1), into `buf`. `cap` must be at least the length
 * reported by `agglab_minimax_poly_len`.
 *
 * # Safety
 * `handle` must be a live result from `agglab_minimax_solve`; `buf` must
 * point to `cap` writable doubles.
 */
enum AgglabStatus agglab_minimax_poly(const struct AgglabMinimax *handle, double *buf, size_t cap);

/**
 * Writes the number of alternation points in the optimality certificate
 * (always `d + 1`) to `out`.
 *
 * # Safety
 * `handle` must be a live result from `agglab_minimax_solve`; `out` must be
 * valid for writing one `size_t`.
 */
enum AgglabStatus agglab_minimax_certificate_len(const struct AgglabMinimax *handle, size_t *out);

/**
 * Copies the certificate into parallel arrays: `points[i]` is the i-th grid
 * point where the optimal level is attained and `signs[i]` is the sign of
 * the polynomial there (`+1`/`-1`, strictly alternating). `cap` applies to
 * both arrays and must cover the length from
 * `agglab_minimax_certificate_len`.
 *
 * # Safety
 * `handle` must be a live result from `agglab_minimax_solve`; `points` and
 * `signs` must point to `cap` writable elements each.
 */
enum AgglabStatus agglab_minimax_certificate(const struct AgglabMinimax *handle,
                                             int64_t *points,
                                             int8_t *signs,
                                             size_t cap);

/**
 * Parses a variance profile from its JSON form (`{"n": ..., "signals":
 * [{"subset": [...], "variance": ..., "family": "gaussian"}, ...]}`) and
 * stores a handle in `out`. Free with `agglab_model_free`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for writing
 * one pointer.
 */
enum AgglabStatus agglab_model_parse(const char *json, struct AgglabModel **out);

/**
 * Builds the adversarial profile with unit variance on every singleton
 * subset of `n` agents and stores a handle in `out`. Requires `n <= 16`.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum AgglabStatus agglab_model_singletons(size_t n, struct AgglabModel **out);

/**
 * Releases a model handle. Null is a no-op.
 *
 * # Safety
 * A non-null `handle` must come from a model constructor and must not be
 * used (or freed) again afterwards.
 */
void agglab_model_free(struct AgglabModel *handle);

/**
 * Writes the model's agent count to `out`.
 *
 * # Safety
 * `handle` must be a live model handle; `out` must be valid for writing one
 * `size_t`.
 */
enum AgglabStatus agglab_model_agents(const struct AgglabModel *handle, size_t *out);

/**
 * Writes the sum of all signal variances to `out`.
 *
 * # Safety
 * `handle` must be a live model handle; `out` must be valid for writing one
 * double.
 */
enum AgglabStatus agglab_model_total_variance(const struct AgglabModel *handle, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AGGLAB_H */
