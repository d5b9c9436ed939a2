#ifndef SNLS_H
#define SNLS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SnlsStatus {
  SNLS_STATUS_OK = 0,
  SNLS_STATUS_NULL_POINTER = 1,
  SNLS_STATUS_INVALID_ARGUMENT = 2,
  SNLS_STATUS_CONFIG = 3,
  SNLS_STATUS_RUNTIME = 4,
  SNLS_STATUS_IO = 5,
  SNLS_STATUS_PANIC = 6,
} SnlsStatus;

// Path configuration (JSON schema of `PathConfig`).
typedef struct SnlsConfig SnlsConfig;

// Periodic spatial grid.
typedef struct SnlsGrid SnlsGrid;

// Result of one path.
typedef struct SnlsRecord SnlsRecord;

// Scalar outcome of a path. Stopping times that were never reached are `+inf`.
typedef struct SnlsPathSummary {
  bool completed;
  uint64_t steps_completed;
  double sup_l2;
  double x2_fifth;
  double x_norm;
  double mass_drift;
  double boundary_mass;
  double stopping_time_m;
  double stopping_time_m_eps;
  double saturation_time;
} SnlsPathSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next `snls_*` call on the same thread.
const char *snls_last_error(void);

// Library version, static storage.
const char *snls_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must come from an `snls_*` function that returns an owned string, or be NULL.
void snls_string_free(char *s);

// Default configuration.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum SnlsStatus snls_config_default(struct SnlsConfig **out);

// Parses and validates a JSON path configuration; missing fields take defaults.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum SnlsStatus snls_config_from_json(const char *json, struct SnlsConfig **out);

// Resolved configuration as JSON; free with [`snls_string_free`].
//
// # Safety
// `cfg` must be a live handle; `out` must be writable.
enum SnlsStatus snls_config_to_json(const struct SnlsConfig *cfg, char **out);

// Overrides the seed of a configuration.
//
// # Safety
// `cfg` must be a live handle.
enum SnlsStatus snls_config_set_seed(struct SnlsConfig *cfg, uint64_t seed);

// # Safety
// `cfg` must be a handle from this library or NULL; it must not be used afterwards.
void snls_config_free(struct SnlsConfig *cfg);

// Runs one path. Aborted paths (NaN/Inf) still produce a record; check
// `completed` in the summary.
//
// # Safety
// `cfg` must be a live handle; `out` must be writable.
enum SnlsStatus snls_run_path(const struct SnlsConfig *cfg, struct SnlsRecord **out);

// # Safety
// `rec` must be a handle from this library or NULL; it must not be used afterwards.
void snls_record_free(struct SnlsRecord *rec);

// Full record as JSON; free with [`snls_string_free`].
//
// # Safety
// `rec` must be a live handle; `out` must be writable.
enum SnlsStatus snls_record_to_json(const struct SnlsRecord *rec, char **out);

// # Safety
// `rec` must be a live handle; `out` must be writable.
enum SnlsStatus snls_record_summary(const struct SnlsRecord *rec, struct SnlsPathSummary *out);

// Copies the final field into `re`/`im` (each `len` doubles). `out_len`
// receives the field length even when `len` is too small. Requires
// `store_final_field` in the config.
//
// # Safety
// `re` and `im` must point to `len` writable doubles; `out_len` must be writable.
enum SnlsStatus snls_record_final_field(const struct SnlsRecord *rec,
                                        double *re,
                                        double *im,
                                        uintptr_t len,
                                        uintptr_t *out_len);

// Grid of `n_points` (a power of two) on `[-L/2, L/2)`.
//
// # Safety
// `out` must be writable.
enum SnlsStatus snls_grid_new(uintptr_t n_points, double domain_length, struct SnlsGrid **out);

// # Safety
// `grid` must be a handle from this library or NULL; it must not be used afterwards.
void snls_grid_free(struct SnlsGrid *grid);

// Number of points, 0 for NULL.
//
// # Safety
// `grid` must be a live handle or NULL.
uintptr_t snls_grid_n_points(const struct SnlsGrid *grid);

// Copies the grid abscissae into `x` (`len` must equal the point count).
//
// # Safety
// `x` must point to `len` writable doubles.
enum SnlsStatus snls_grid_points(const struct SnlsGrid *grid, double *x, uintptr_t len);

// Applies the free propagator `e^{itΔ}` in place.
//
// # Safety
// `re` and `im` must point to `len` readable and writable doubles.
enum SnlsStatus snls_free_propagate(const struct SnlsGrid *grid,
                                    double *re,
                                    double *im,
                                    uintptr_t len,
                                    double t);

// Discrete `L^p` norm (`p = inf` allowed).
//
// # Safety
// `re` and `im` must point to `len` readable doubles; `out` must be writable.
enum SnlsStatus snls_lp_norm(const struct SnlsGrid *grid,
                             const double *re,
                             const double *im,
                             uintptr_t len,
                             double p,
                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SNLS_H */
