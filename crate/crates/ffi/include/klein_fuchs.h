#ifndef KLEIN_FUCHS_H
#define KLEIN_FUCHS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum KfStatus {
  KF_STATUS_OK = 0,
  KF_STATUS_NULL_POINTER = 1,
  KF_STATUS_INVALID_UTF8 = 2,
  KF_STATUS_MALFORMED_JSON = 3,
  KF_STATUS_INVALID_INPUT = 4,
  KF_STATUS_NUMERICAL = 5,
  KF_STATUS_OUT_OF_RANGE = 6,
  KF_STATUS_BUFFER_TOO_SMALL = 7,
  KF_STATUS_PANIC = 8,
} KfStatus;

/**
 * A Fuchsian equation, possibly without accessory parameters.
 */
typedef struct KfEquation KfEquation;

/**
 * Klein operator data for one complete equation.
 */
typedef struct KfKlein KfKlein;

/**
 * Accessory solutions for one equation.
 */
typedef struct KfSolveReport KfSolveReport;

typedef struct KfComplex {
  double re;
  double im;
} KfComplex;

/**
 * Angle conditions for a list of angles.
 */
typedef struct KfAngleReport {
  bool coaxial_ok;
  bool cond;
  double cond_value;
  int64_t sigma;
  uint64_t bound;
} KfAngleReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *kf_last_error(void);

/**
 * Library version as a static string.
 */
const char *kf_version(void);

/**
 * # Safety
 * `s` is null or a string returned by this library and not yet freed.
 */
void kf_string_free(char *s);

/**
 * Parses an equation from its JSON form.
 *
 * # Safety
 * `json` is a NUL-terminated string; `out` is writable.
 */
enum KfStatus kf_equation_from_json(const char *json, struct KfEquation **out);

/**
 * Skeleton equation from angles and positions (`{"angles": [...], "positions": [...]}`),
 * with the first three points sent to `0, 1, infinity`.
 *
 * # Safety
 * `json` is a NUL-terminated string; `out` is writable.
 */
enum KfStatus kf_equation_from_angles_json(const char *json, struct KfEquation **out);

/**
 * # Safety
 * `eq` is a live handle; `out` is writable. Free the string with [`kf_string_free`].
 */
enum KfStatus kf_equation_to_json(const struct KfEquation *eq, char **out);

/**
 * Number of apparent points `k`.
 *
 * # Safety
 * `eq` is a live handle; `out` is writable.
 */
enum KfStatus kf_equation_apparent_count(const struct KfEquation *eq, size_t *out);

/**
 * Copies the accessory coefficients into `buf` (capacity `cap`); `len` receives the count,
 * zero for a skeleton.
 *
 * # Safety
 * `eq` is a live handle; `buf` holds `cap` elements; `len` is writable.
 */
enum KfStatus kf_equation_accessory(const struct KfEquation *eq,
                                    struct KfComplex *buf,
                                    size_t cap,
                                    size_t *len);

/**
 * # Safety
 * `eq` is null or a handle not yet freed.
 */
void kf_equation_free(struct KfEquation *eq);

/**
 * Finds every accessory vector that makes the integer-exponent points apparent.
 *
 * # Safety
 * `eq` is a live handle; `out` is writable.
 */
enum KfStatus kf_solve(const struct KfEquation *eq, uint64_t seed, struct KfSolveReport **out);

/**
 * # Safety
 * `report` is a live handle; `out` is writable.
 */
enum KfStatus kf_solve_count(const struct KfSolveReport *report, size_t *out);

/**
 * Bezout bound of the polynomial system.
 *
 * # Safety
 * `report` is a live handle; `out` is writable.
 */
enum KfStatus kf_solve_bezout(const struct KfSolveReport *report, size_t *out);

/**
 * Largest relative apparency residual of solution `index`.
 *
 * # Safety
 * `report` is a live handle; `out` is writable.
 */
enum KfStatus kf_solve_residual(const struct KfSolveReport *report, size_t index, double *out);

/**
 * Complete equation for solution `index`, as a new handle.
 *
 * # Safety
 * `report` is a live handle; `out` is writable.
 */
enum KfStatus kf_solve_equation(const struct KfSolveReport *report,
                                size_t index,
                                struct KfEquation **out);

/**
 * Full report as JSON.
 *
 * # Safety
 * `report` is a live handle; `out` is writable. Free the string with [`kf_string_free`].
 */
enum KfStatus kf_solve_to_json(const struct KfSolveReport *report, char **out);

/**
 * # Safety
 * `report` is null or a handle not yet freed.
 */
void kf_solve_free(struct KfSolveReport *report);

/**
 * Klein operator of a complete equation.
 *
 * # Safety
 * `eq` is a live handle; `out` is writable.
 */
enum KfStatus kf_klein(const struct KfEquation *eq, struct KfKlein **out);

/**
 * Coefficients of `Q`, lowest degree first.
 *
 * # Safety
 * `k` is a live handle; `buf` holds `cap` elements; `len` is writable.
 */
enum KfStatus kf_klein_q(const struct KfKlein *k, struct KfComplex *buf, size_t cap, size_t *len);

/**
 * Relative residuals of the two series solutions truncated at `order` (0 for the default).
 *
 * # Safety
 * `k` is a live handle; `r1` and `r2` are writable.
 */
enum KfStatus kf_klein_residuals(const struct KfKlein *k, size_t order, double *r1, double *r2);

/**
 * Largest projective distance between the conjugated source monodromy and the
 * hypergeometric monodromy over all loops.
 *
 * # Safety
 * `k` is a live handle; `out` is writable.
 */
enum KfStatus kf_klein_monodromy_distance(const struct KfKlein *k, double *out);

/**
 * # Safety
 * `k` is null or a handle not yet freed.
 */
void kf_klein_free(struct KfKlein *k);

/**
 * Angle conditions: three non-integer angles followed by integers at least 2.
 *
 * # Safety
 * `angles` holds `n` values; `out` is writable.
 */
enum KfStatus kf_check_angles(const double *angles, size_t n, struct KfAngleReport *out);

/**
 * Number of verified metrics for angles and positions given as JSON.
 *
 * # Safety
 * `json` is a NUL-terminated string; `out` is writable.
 */
enum KfStatus kf_count_metrics(const char *json, uint64_t seed, size_t *out);

/**
 * Semistandard fillings of the two-row rectangle with content `angles[j] - 1`.
 *
 * # Safety
 * `angles` holds `n` values; `out` is writable.
 */
enum KfStatus kf_tableaux_count(const uint32_t *angles, size_t n, uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KLEIN_FUCHS_H */
