#ifndef HYPBM_H
#define HYPBM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Estimator for rates over a path set.
 */
typedef enum HypbmMethod {
  /**
   * `r_T / T`.
   */
  HYPBM_METHOD_ENDPOINT = 0,
  /**
   * `(r_T - r_{T/2}) / (T/2)`.
   */
  HYPBM_METHOD_INCREMENT = 1,
} HypbmMethod;

/**
 * Simulation scheme.
 */
typedef enum HypbmScheme {
  HYPBM_SCHEME_HALF_PLANE_EXACT = 0,
  HYPBM_SCHEME_POLAR_EM = 1,
  HYPBM_SCHEME_HYPERBOLOID_EM = 2,
} HypbmScheme;

/**
 * Result code of every fallible call.
 */
typedef enum HypbmStatus {
  HYPBM_STATUS_OK = 0,
  HYPBM_STATUS_NULL_POINTER = 1,
  HYPBM_STATUS_INVALID_ARGUMENT = 2,
  HYPBM_STATUS_DOMAIN = 3,
  HYPBM_STATUS_NUMERIC = 4,
  HYPBM_STATUS_UNSUPPORTED = 5,
  HYPBM_STATUS_PANIC = 6,
} HypbmStatus;

/**
 * Opaque model handle.
 */
typedef struct HypbmModel HypbmModel;

/**
 * Opaque handle to simulated paths.
 */
typedef struct HypbmPathSet HypbmPathSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hypbm_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *hypbm_last_error_message(void);

/**
 * Constant curvature `-a^2` in dimension `dim`.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum HypbmStatus hypbm_model_new_constant(size_t dim, double a, struct HypbmModel **out);

/**
 * # Safety
 * `model` must come from `hypbm_model_new_constant` and not be freed twice.
 */
void hypbm_model_free(struct HypbmModel *model);

/**
 * Heat kernel `p(t, r)` of a constant-curvature model.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for writing.
 */
enum HypbmStatus hypbm_heat_kernel(const struct HypbmModel *model, double t, double r, double *out);

/**
 * Green function `G(r)` of a constant-curvature model.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for writing.
 */
enum HypbmStatus hypbm_green_function(const struct HypbmModel *model, double r, double *out);

/**
 * Simulate `n_paths` paths from the base point up to `t_end`, keeping the
 * endpoints and the state at `t_end / 2`.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for a pointer write.
 */
enum HypbmStatus hypbm_simulate(const struct HypbmModel *model,
                                enum HypbmScheme scheme,
                                double t_end,
                                double dt,
                                size_t n_paths,
                                uint64_t seed,
                                struct HypbmPathSet **out);

/**
 * Number of paths, or 0 for a null handle.
 *
 * # Safety
 * `set` must be null or a live handle.
 */
size_t hypbm_pathset_len(const struct HypbmPathSet *set);

/**
 * Distances from the base point at `t_end`, ordered by path id, into
 * `buf[0..len]`; `len` must equal the number of paths.
 *
 * # Safety
 * `set` must be a live handle and `buf` valid for `len` writes.
 */
enum HypbmStatus hypbm_pathset_final_distances(const struct HypbmPathSet *set,
                                               double *buf,
                                               size_t len);

/**
 * Drift estimate and its standard error.
 *
 * # Safety
 * `set` must be a live handle; `value` and `std_error` valid for writing.
 */
enum HypbmStatus hypbm_pathset_drift(const struct HypbmPathSet *set,
                                     enum HypbmMethod method,
                                     double *value,
                                     double *std_error);

/**
 * # Safety
 * `set` must come from `hypbm_simulate` and not be freed twice.
 */
void hypbm_pathset_free(struct HypbmPathSet *set);

/**
 * Closed-form kernel checks at default tolerances; `*all_pass` is set to 1
 * when every check passes and 0 otherwise.
 *
 * # Safety
 * `all_pass` must be valid for writing.
 */
enum HypbmStatus hypbm_kernel_selfcheck(int32_t *all_pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPBM_H */
