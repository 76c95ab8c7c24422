#ifndef MESHLESS_STOKES_H
#define MESHLESS_STOKES_H

/* Generated by cbindgen from the meshless-stokes-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum MsStatus {
  MS_STATUS_OK = 0,
  MS_STATUS_NULL_POINTER = 1,
  MS_STATUS_INVALID_ARGUMENT = 2,
  MS_STATUS_CONFIG = 3,
  MS_STATUS_GEOMETRY = 4,
  MS_STATUS_RESOLUTION = 5,
  MS_STATUS_STENCIL = 6,
  MS_STATUS_SOLVER = 7,
  MS_STATUS_IO = 8,
  MS_STATUS_PANIC = 9,
} MsStatus;

/**
 * Opaque simulation configuration.
 */
typedef struct MsConfig MsConfig;

/**
 * Opaque result of one steady solve.
 */
typedef struct MsSolution MsSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL if none failed.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *ms_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ms_version(void);

/**
 * Loads a built-in configuration by name (e.g. "channel", "quiescent").
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a writable pointer.
 */
enum MsStatus ms_config_preset(const char *name, struct MsConfig **out);

/**
 * Parses a configuration from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a writable pointer.
 */
enum MsStatus ms_config_parse(const char *toml, struct MsConfig **out);

/**
 * Sets the reconstruction order (2 or 4).
 *
 * # Safety
 * `cfg` must be a live handle from `ms_config_preset` or `ms_config_parse`.
 */
enum MsStatus ms_config_set_order(struct MsConfig *cfg, size_t order);

/**
 * Releases a configuration. NULL is ignored.
 *
 * # Safety
 * `cfg` must be NULL or a live handle not freed before.
 */
void ms_config_free(struct MsConfig *cfg);

/**
 * Builds the point cloud and solves the steady problem of `cfg`.
 *
 * # Safety
 * `cfg` must be a live configuration handle and `out` a writable pointer.
 */
enum MsStatus ms_solve(const struct MsConfig *cfg, struct MsSolution **out);

/**
 * Number of points in the solution cloud, 0 for NULL.
 *
 * # Safety
 * `sol` must be NULL or a live solution handle.
 */
size_t ms_solution_len(const struct MsSolution *sol);

/**
 * Number of colloids in the solution, 0 for NULL.
 *
 * # Safety
 * `sol` must be NULL or a live solution handle.
 */
size_t ms_solution_colloid_count(const struct MsSolution *sol);

/**
 * Copies the field into caller buffers. `xy` and `uv` hold `2*len`
 * interleaved values, `p` holds `len`; any of them may be NULL to skip it.
 * `len` must equal `ms_solution_len`.
 *
 * # Safety
 * Non-NULL buffers must be writable for the sizes above.
 */
enum MsStatus ms_solution_copy_field(const struct MsSolution *sol,
                                     double *xy,
                                     double *uv,
                                     double *p,
                                     size_t len);

/**
 * Rigid motion (vx, vy, angular velocity) and fluid load (fx, fy, torque)
 * of colloid `index`. Either output may be NULL.
 *
 * # Safety
 * Non-NULL `motion` and `load` must be writable for 3 doubles each.
 */
enum MsStatus ms_solution_colloid(const struct MsSolution *sol,
                                  size_t index,
                                  double *motion,
                                  double *load);

/**
 * Krylov iteration count and final relative residual of the solve.
 *
 * # Safety
 * Non-NULL outputs must be writable.
 */
enum MsStatus ms_solution_krylov(const struct MsSolution *sol,
                                 size_t *iterations,
                                 double *residual);

/**
 * Releases a solution. NULL is ignored.
 *
 * # Safety
 * `sol` must be NULL or a live handle not freed before.
 */
void ms_solution_free(struct MsSolution *sol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MESHLESS_STOKES_H */
