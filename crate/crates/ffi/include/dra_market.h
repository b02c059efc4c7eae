#ifndef DRA_MARKET_H
#define DRA_MARKET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum DraStatus {
  DRA_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DRA_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  DRA_STATUS_INVALID_UTF8 = 2,
  /**
   * An index argument was outside the report.
   */
  DRA_STATUS_OUT_OF_RANGE = 3,
  /**
   * Configuration or input data failed validation.
   */
  DRA_STATUS_INVALID_INPUT = 4,
  /**
   * The computation failed (infeasible schedule, singular clearing, …).
   */
  DRA_STATUS_COMPUTE_FAILED = 5,
  /**
   * Reading or writing a file failed.
   */
  DRA_STATUS_IO = 6,
  /**
   * The report has no pure equilibrium to query.
   */
  DRA_STATUS_NO_EQUILIBRIUM = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  DRA_STATUS_PANIC = 8,
} DraStatus;

typedef enum DraMechanism {
  DRA_MECHANISM_NON_COOPERATIVE = 0,
  DRA_MECHANISM_STACKELBERG = 1,
} DraMechanism;

/**
 * Opaque game report.
 */
typedef struct DraReport DraReport;

typedef struct DraMarketOutcome {
  double p_a;
  double p_b;
  double phi_t;
  bool price_capped;
} DraMarketOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *dra_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dra_version(void);

/**
 * Plays the bundled case study under the given variant.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum DraStatus dra_run_case_study(enum DraMechanism mechanism, bool dr, struct DraReport **out);

/**
 * Loads a TOML game config and plays it.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for one write.
 */
enum DraStatus dra_run_config(const char *path, struct DraReport **out);

/**
 * Releases a report. Null is ignored.
 *
 * # Safety
 * `report` must come from `dra_run_*` and not have been freed already.
 */
void dra_report_free(struct DraReport *report);

/**
 * Number of seller types: A's into `m_types`, B's into `n_types`.
 *
 * # Safety
 * All pointers must be valid; `report` must be a live handle.
 */
enum DraStatus dra_report_type_counts(const struct DraReport *report,
                                      size_t *m_types,
                                      size_t *n_types);

/**
 * Number of pure equilibria found; zero when none exists.
 *
 * # Safety
 * `report` must be a live handle or null (which yields 0).
 */
size_t dra_report_equilibrium_count(const struct DraReport *report);

/**
 * Zero-based strategy indices of equilibrium `index` (0 is the primary).
 * `actions_a` needs room for A's type count, `actions_b` for B's.
 *
 * # Safety
 * Array pointers must be valid for the stated lengths.
 */
enum DraStatus dra_report_equilibrium(const struct DraReport *report,
                                      size_t index,
                                      size_t *actions_a,
                                      size_t len_a,
                                      size_t *actions_b,
                                      size_t len_b);

/**
 * Interim expected payoff of `player` (`'A'` or `'B'`) of type `own_type`
 * at the primary equilibrium.
 *
 * # Safety
 * `value` must be valid for one write.
 */
enum DraStatus dra_report_equilibrium_payoff(const struct DraReport *report,
                                             char player,
                                             size_t own_type,
                                             double *value);

/**
 * One entry of an expected payoff matrix: `player` `'A'` or `'B'`, the
 * owner's type, the strategy row and the κ column, all zero-based.
 *
 * # Safety
 * `value` must be valid for one write.
 */
enum DraStatus dra_report_expected_payoff(const struct DraReport *report,
                                          char player,
                                          size_t own_type,
                                          size_t row,
                                          size_t column,
                                          double *value);

/**
 * Human-readable summary; release with `dra_string_free`. Null on error.
 *
 * # Safety
 * `report` must be a live handle.
 */
char *dra_report_summary(const struct DraReport *report);

/**
 * Writes the report's CSV files, summary and manifest into `dir`.
 *
 * # Safety
 * `dir` must be a NUL-terminated string.
 */
enum DraStatus dra_report_write(const struct DraReport *report, const char *dir);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void dra_string_free(char *s);

/**
 * Clears one market between two linear bids `λ = λ₀ + slope·P`, applying
 * `price_cap` when it is positive.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum DraStatus dra_clear_two_sellers(double lambda0_a,
                                     double slope_a,
                                     double lambda0_b,
                                     double slope_b,
                                     double demand,
                                     double price_cap,
                                     struct DraMarketOutcome *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DRA_MARKET_H */
