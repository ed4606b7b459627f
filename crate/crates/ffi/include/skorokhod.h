#ifndef SKOROKHOD_H
#define SKOROKHOD_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SkdStatus {
  SKD_STATUS_OK = 0,
  SKD_STATUS_NULL_POINTER = 1,
  SKD_STATUS_INVALID_ARGUMENT = 2,
  SKD_STATUS_PARSE = 3,
  SKD_STATUS_ENGINE = 4,
  SKD_STATUS_LOGIC = 5,
  SKD_STATUS_IO = 6,
  SKD_STATUS_PANIC = 7,
} SkdStatus;

/**
 * A parsed formula.
 */
typedef struct SkdFormula SkdFormula;

/**
 * A polygonal trace.
 */
typedef struct SkdTrace SkdTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *skd_last_error(void);

/**
 * Builds a trace from `len` timestamps and a row-major `len * dim` value
 * buffer.
 *
 * # Safety
 * `times` must point to `len` doubles, `values` to `len * dim` doubles and
 * `out` to writable storage for one pointer.
 */
enum SkdStatus skd_trace_new(const double *times,
                             const double *values,
                             size_t len,
                             size_t dim,
                             struct SkdTrace **out);

/**
 * Reads a CSV trace with time in the first column.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum SkdStatus skd_trace_from_csv(const char *path, struct SkdTrace **out);

/**
 * # Safety
 * `trace` must be null or a handle from this library not yet freed.
 */
void skd_trace_free(struct SkdTrace *trace);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t skd_trace_len(const struct SkdTrace *trace);

/**
 * Value dimension, or 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t skd_trace_dim(const struct SkdTrace *trace);

/**
 * Skorokhod distance within `tol`. A `window_radius` of 0 means unbounded.
 * `monitor_calls` may be null.
 *
 * # Safety
 * `a` and `b` must be live handles; `distance` must be writable.
 */
enum SkdStatus skd_distance(const struct SkdTrace *a,
                            const struct SkdTrace *b,
                            size_t window_radius,
                            double tol,
                            double *distance,
                            size_t *monitor_calls);

/**
 * Decides whether the distance is at most `delta`.
 *
 * # Safety
 * `a` and `b` must be live handles; `within` must be writable.
 */
enum SkdStatus skd_check_within(const struct SkdTrace *a,
                                const struct SkdTrace *b,
                                double delta,
                                size_t window_radius,
                                bool *within);

/**
 * Parses a formula.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` writable.
 */
enum SkdStatus skd_formula_parse(const char *text, struct SkdFormula **out);

/**
 * # Safety
 * `formula` must be null or a live handle.
 */
void skd_formula_free(struct SkdFormula *formula);

/**
 * Formula text; release it with [`skd_string_free`]. Null on a null handle.
 *
 * # Safety
 * `formula` must be null or a live handle.
 */
char *skd_formula_to_string(const struct SkdFormula *formula);

/**
 * # Safety
 * `s` must be null or a string returned by this library not yet freed.
 */
void skd_string_free(char *s);

/**
 * Relaxes the negation normal form of `formula` by `delta` over the time
 * domain `[lo, hi]`. Formulas with signal constraints are not supported
 * through this entry point.
 *
 * # Safety
 * `formula` must be a live handle and `out` writable.
 */
enum SkdStatus skd_formula_relax(const struct SkdFormula *formula,
                                 double delta,
                                 double lo,
                                 double hi,
                                 struct SkdFormula **out);

/**
 * Evaluates `formula` on `trace` from its start. `preds_json` is a JSON
 * predicate table and may be null when the formula names no propositions.
 *
 * # Safety
 * Handles must be live, `preds_json` null or NUL-terminated, `holds`
 * writable.
 */
enum SkdStatus skd_formula_eval(const struct SkdFormula *formula,
                                const struct SkdTrace *trace,
                                const char *preds_json,
                                bool *holds);

/**
 * Library version as a static NUL-terminated string.
 */
const char *skd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKOROKHOD_H */
