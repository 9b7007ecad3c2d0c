#ifndef QRFORMS_H
#define QRFORMS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QrfStatus {
  QRF_STATUS_OK = 0,
  QRF_STATUS_NULL_POINTER = 1,
  QRF_STATUS_INVALID_ARGUMENT = 2,
  QRF_STATUS_DIMENSION_MISMATCH = 3,
  QRF_STATUS_NUMERICAL = 4,
  QRF_STATUS_PARSE = 5,
  QRF_STATUS_IO = 6,
  QRF_STATUS_PANIC = 7,
} QrfStatus;

typedef enum QrfFormat {
  QRF_FORMAT_JSON = 0,
  QRF_FORMAT_CSV = 1,
} QrfFormat;

/**
 * Opaque handle to a catalogue map.
 */
typedef struct QrfMap QrfMap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next library call on the same thread.
 */
const char *qrf_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qrf_version(void);

/**
 * Builds a catalogue map (`identity`, `linear`, `winding2d`, `winding3d`,
 * `radial_stretch`, `mobius2d`) from flat numeric parameters.
 *
 * # Safety
 * `name` must be a NUL-terminated string, `params` must point to `len`
 * doubles (or be null when `len` is 0) and `out_map` must be writable.
 */
enum QrfStatus qrf_map_new(const char *name,
                           const double *params,
                           size_t len,
                           struct QrfMap **out_map);

/**
 * # Safety
 * `map` must come from [`qrf_map_new`] and not have been freed. Null is
 * ignored.
 */
void qrf_map_free(struct QrfMap *map);

/**
 * Source dimension of `map`, or 0 for a null handle.
 *
 * # Safety
 * `map` must be null or a live handle.
 */
size_t qrf_map_dim(const struct QrfMap *map);

/**
 * `y = f(x)`, both of length `n`.
 *
 * # Safety
 * `x` and `y` must each point to `n` doubles.
 */
enum QrfStatus qrf_map_eval(const struct QrfMap *map, const double *x, size_t n, double *y);

/**
 * Jacobian matrix `Df(x)` written row-major into `jac` (`n*n` doubles).
 *
 * # Safety
 * `x` must point to `n` doubles and `jac` to `n*n` doubles.
 */
enum QrfStatus qrf_map_jacobian(const struct QrfMap *map, const double *x, size_t n, double *jac);

/**
 * Singular values (descending), signed Jacobian and outer dilatation of an
 * `n×n` row-major matrix with Euclidean metrics.
 *
 * # Safety
 * `matrix` must point to `n*n` doubles, `singvals` to `n` doubles; the
 * scalar outputs must be writable.
 */
enum QrfStatus qrf_svd(const double *matrix,
                       size_t n,
                       double *singvals,
                       double *signed_jac,
                       double *k_outer);

/**
 * Comass of a k-covector in the Euclidean metric. `coeffs` holds the
 * `C(n,k)` coefficients in lexicographic multi-index order. `lower` is exact
 * when `certified` is set, otherwise the best lower bound found; `norm` is
 * the Grassmann norm.
 *
 * # Safety
 * `coeffs` must point to `len` doubles; the outputs must be writable.
 */
enum QrfStatus qrf_comass(const double *coeffs,
                          size_t len,
                          size_t dim,
                          size_t grade,
                          uint64_t seed,
                          double *lower,
                          double *norm,
                          bool *certified);

/**
 * `K_hat = max |Df|ⁿ / J_f` over the grid `[lo, hi]ⁿ` with `samples` nodes
 * per axis, and the largest relative violation of the dilatation
 * inequalities.
 *
 * # Safety
 * `map` must be a live handle; the outputs must be writable.
 */
enum QrfStatus qrf_map_dilatation(const struct QrfMap *map,
                                  double lo,
                                  double hi,
                                  size_t samples,
                                  double *k_hat,
                                  double *max_violation);

/**
 * Local index `i(f, x)` of a planar map by the winding number of `f - f(x)`
 * on a circle of `radius` about `x`.
 *
 * # Safety
 * `x` must point to 2 doubles; the outputs must be writable.
 */
enum QrfStatus qrf_local_index(const struct QrfMap *map,
                               const double *x,
                               double radius,
                               int64_t *index,
                               double *residual);

/**
 * Number of preimages of `y` in the disk of `radius` about the origin,
 * seeded from a `scan_samples²` grid over `[-radius, radius]²`.
 *
 * # Safety
 * `y` must point to 2 doubles; the outputs must be writable.
 */
enum QrfStatus qrf_preimage_count(const struct QrfMap *map,
                                  const double *y,
                                  double radius,
                                  size_t scan_samples,
                                  size_t *count,
                                  bool *unstable);

/**
 * Runs the verification suite for a JSON configuration and returns the
 * report in `format`. `report` receives a string owned by the library,
 * released with [`qrf_string_free`]; `all_pass` reports the verdict.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; the outputs must be
 * writable.
 */
enum QrfStatus qrf_run_suite(const char *config_json,
                             enum QrfFormat format,
                             char **report,
                             bool *all_pass);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void qrf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QRFORMS_H */
