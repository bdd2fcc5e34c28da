#ifndef CONTDIAG_H
#define CONTDIAG_H

/* Generated by cbindgen from contdiag-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Diagonalization mode selector for `contdiag_diagonalize`.
 */
typedef enum {
  /**
   * Eigenvalues distinct on the whole interval.
   */
  CONTDIAG_MODE_DISTINCT = 0,
  /**
   * C^1 field, finitely many coalescence points.
   */
  CONTDIAG_MODE_C1 = 1,
} ContdiagMode;

/**
 * Status codes; nonzero values match the `contdiag` CLI exit codes.
 */
typedef enum {
  CONTDIAG_STATUS_OK = 0,
  CONTDIAG_STATUS_INTERNAL_ERROR = 1,
  CONTDIAG_STATUS_INVALID_ARGUMENT = 2,
  CONTDIAG_STATUS_GAP_TOO_SMALL = 3,
  CONTDIAG_STATUS_OBSTRUCTION_DETECTED = 4,
  CONTDIAG_STATUS_DERIVATIVE_DISCONTINUOUS = 5,
  CONTDIAG_STATUS_NOT_FINITELY_MANY = 6,
} ContdiagStatus;

/**
 * Opaque field handle.
 */
typedef struct ContdiagField ContdiagField;

/**
 * Opaque solution handle.
 */
typedef struct ContdiagTrack ContdiagTrack;

/**
 * Residual summary of a computed track.
 */
typedef struct {
  double max_unitarity_defect;
  double max_offdiag_resid;
  double max_step_jump;
  double min_gap;
} ContdiagMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build a field from four expression strings on `[a, b]`.
 * On success writes a new handle to `out`; free it with
 * `contdiag_field_free`.
 *
 * # Safety
 * The expression pointers must be NUL-terminated strings and `out` must
 * be a valid pointer.
 */
ContdiagStatus contdiag_field_new(const char *f,
                                  const char *g,
                                  const char *h_re,
                                  const char *h_im,
                                  double a,
                                  double b,
                                  ContdiagField **out);

/**
 * # Safety
 * `field` must come from `contdiag_field_new` and not be freed twice.
 */
void contdiag_field_free(ContdiagField *field);

/**
 * Evaluate the field entries at `t`: writes `[f, g, h_re, h_im]`.
 *
 * # Safety
 * `field` must be a live handle; `out` must point to 4 doubles.
 */
ContdiagStatus contdiag_field_eval(const ContdiagField *field, double t, double *out);

/**
 * Closed-form eigenvalues of the field at `t`.
 *
 * # Safety
 * All pointers must be valid.
 */
ContdiagStatus contdiag_eigenvalues_at(const ContdiagField *field,
                                       double t,
                                       double *plus,
                                       double *minus);

/**
 * Run a diagonalization on an `n`-point uniform grid and hand back a
 * track. Free with `contdiag_track_free`.
 *
 * # Safety
 * `field` must be a live handle and `out` a valid pointer.
 */
ContdiagStatus contdiag_diagonalize(const ContdiagField *field,
                                    uintptr_t n,
                                    ContdiagMode mode,
                                    ContdiagTrack **out);

/**
 * Number of grid nodes in the track.
 *
 * # Safety
 * `track` must be a live handle (null returns 0).
 */
uintptr_t contdiag_track_len(const ContdiagTrack *track);

/**
 * Copy row `i` into `out` as 13 doubles:
 * `t, ReU11, ImU11, ReU12, ImU12, ReU21, ImU21, ReU22, ImU22, d1, d2,
 * offdiag_resid, unitarity_defect` (the CSV column layout).
 *
 * # Safety
 * `track` must be a live handle; `out` must point to 13 doubles.
 */
ContdiagStatus contdiag_track_row(const ContdiagTrack *track, uintptr_t i, double *out);

/**
 * Residual summary of the track.
 *
 * # Safety
 * `track` must be a live handle; `out` must be a valid pointer.
 */
ContdiagStatus contdiag_track_metrics(const ContdiagTrack *track, ContdiagMetrics *out);

/**
 * # Safety
 * `track` must come from `contdiag_diagonalize` and not be freed twice.
 */
void contdiag_track_free(ContdiagTrack *track);

/**
 * Copy the most recent error message on this thread into `buf`
 * (truncated, always NUL-terminated when `cap > 0`). Returns the full
 * message length in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must point to at least `cap` writable bytes, or be null.
 */
uintptr_t contdiag_last_error_message(char *buf, uintptr_t cap);

/**
 * Static version string, NUL-terminated.
 */
const char *contdiag_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CONTDIAG_H */
