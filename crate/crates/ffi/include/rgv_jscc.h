#ifndef RGV_JSCC_H
#define RGV_JSCC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Simulation mode for [`rgv_estimate_error`].
 */
typedef enum RgvSimMode {
  /**
   * One codebook for all trials.
   */
  RGV_SIM_MODE_FIXED = 0,
  /**
   * A new codebook per trial.
   */
  RGV_SIM_MODE_FRESH = 1,
} RgvSimMode;

/**
 * Result code of every call.
 */
typedef enum RgvStatus {
  RGV_STATUS_OK = 0,
  RGV_STATUS_NULL_POINTER = 1,
  RGV_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed or inconsistent configuration.
   */
  RGV_STATUS_CONFIG = 3,
  /**
   * Invalid numeric argument (pmf, channel, index).
   */
  RGV_STATUS_INVALID_ARGUMENT = 4,
  /**
   * A codeword draw had no admissible sequence.
   */
  RGV_STATUS_INFEASIBLE = 5,
  /**
   * An enumeration exceeded its cap.
   */
  RGV_STATUS_TOO_LARGE = 6,
  /**
   * A codebook text could not be parsed.
   */
  RGV_STATUS_FORMAT = 7,
  /**
   * The library panicked; the handle arguments should be discarded.
   */
  RGV_STATUS_PANIC = 8,
} RgvStatus;

/**
 * A constructed or parsed codebook.
 */
typedef struct RgvCodebook RgvCodebook;

/**
 * Parsed experiment: code configuration, channel and solver.
 */
typedef struct RgvExperiment RgvExperiment;

/**
 * Monte Carlo error estimate with a Clopper-Pearson 95% interval.
 */
typedef struct RgvErrorEstimate {
  uint64_t trials;
  uint64_t errors;
  uint64_t ties;
  double p_hat;
  double ci_low;
  double ci_high;
} RgvErrorEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *rgv_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void rgv_string_free(char *s);

/**
 * Library version as a static string.
 */
const char *rgv_version(void);

/**
 * Parses a TOML experiment description. Relative table paths resolve
 * against the working directory.
 *
 * # Safety
 * `toml` must be a nul-terminated string; `out` must be writable.
 */
enum RgvStatus rgv_experiment_from_toml(const char *toml, struct RgvExperiment **out);

/**
 * # Safety
 * `exp` must be null or a live handle from [`rgv_experiment_from_toml`].
 */
void rgv_experiment_free(struct RgvExperiment *exp);

/**
 * Number of source messages `|V|^k`.
 *
 * # Safety
 * `exp` must be a live handle; `out` must be writable.
 */
enum RgvStatus rgv_experiment_num_messages(const struct RgvExperiment *exp, uint64_t *out);

/**
 * Builds a codebook from `seed`. Equal seeds give the same codebook as the
 * `construct` command of the command-line tool.
 *
 * # Safety
 * `exp` must be a live handle; `out` must be writable.
 */
enum RgvStatus rgv_codebook_construct(const struct RgvExperiment *exp,
                                      uint64_t seed,
                                      struct RgvCodebook **out);

/**
 * Parses a codebook from its text form.
 *
 * # Safety
 * `text` must be a nul-terminated string; `out` must be writable.
 */
enum RgvStatus rgv_codebook_from_text(const char *text, struct RgvCodebook **out);

/**
 * Text form of a codebook; free it with [`rgv_string_free`].
 *
 * # Safety
 * `cb` must be a live handle; `out` must be writable.
 */
enum RgvStatus rgv_codebook_to_text(const struct RgvCodebook *cb, char **out);

/**
 * # Safety
 * `cb` must be null or a live codebook handle.
 */
void rgv_codebook_free(struct RgvCodebook *cb);

/**
 * Number of codewords.
 *
 * # Safety
 * `cb` must be a live handle; `out` must be writable.
 */
enum RgvStatus rgv_codebook_len(const struct RgvCodebook *cb, size_t *out);

/**
 * Copies codeword `index` (in message order) into `buf`, which holds `len`
 * symbols and must hold at least `n`.
 *
 * # Safety
 * `cb` must be a live handle; `buf` must point to `len` writable bytes.
 */
enum RgvStatus rgv_codebook_codeword(const struct RgvCodebook *cb,
                                     size_t index,
                                     uint8_t *buf,
                                     size_t len);

/**
 * Checks the codebook against the experiment's distance thresholds.
 * `ok` is set to false when any pair violates them.
 *
 * # Safety
 * Handles must be live; `ok` must be writable.
 */
enum RgvStatus rgv_codebook_verify(const struct RgvExperiment *exp,
                                   const struct RgvCodebook *cb,
                                   bool *ok);

/**
 * Monte Carlo estimate of the block error probability.
 *
 * # Safety
 * `exp` must be a live handle; `out` must be writable.
 */
enum RgvStatus rgv_estimate_error(const struct RgvExperiment *exp,
                                  uint64_t seed,
                                  uint64_t trials,
                                  enum RgvSimMode mode,
                                  struct RgvErrorEstimate *out);

/**
 * Smallest pair exponent of the experiment, using its configured solver.
 * Infinite values are reported as `INFINITY`.
 *
 * # Safety
 * `exp` must be a live handle; `out` must be writable.
 */
enum RgvStatus rgv_overall_exponent(const struct RgvExperiment *exp, double *out);

/**
 * Source reliability function `e(R, P)` of the pmf `p[0..len]`.
 * `grid = 0` selects the continuous solver, otherwise the grid denominator.
 *
 * # Safety
 * `p` must point to `len` readable values; `out` must be writable.
 */
enum RgvStatus rgv_source_reliability(const double *p,
                                      size_t len,
                                      double rate,
                                      uint64_t grid,
                                      double *out);

/**
 * Random coding exponent `E_r(Q, R)` for input pmf `q[0..inputs]` and the
 * row-major channel `w[0..inputs * outputs]`. `grid` as in
 * [`rgv_source_reliability`].
 *
 * # Safety
 * Pointers must cover the stated lengths; `out` must be writable.
 */
enum RgvStatus rgv_random_coding_exponent(const double *q,
                                          const double *w,
                                          size_t inputs,
                                          size_t outputs,
                                          double rate,
                                          uint64_t grid,
                                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RGV_JSCC_H */
