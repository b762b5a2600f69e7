#ifndef SRBKIT_H
#define SRBKIT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result codes of every fallible entry point.
typedef enum SrbStatus {
  SRB_STATUS_OK = 0,
  SRB_STATUS_NULL_POINTER = 1,
  SRB_STATUS_INVALID_UTF8 = 2,
  SRB_STATUS_INVALID_ARGUMENT = 3,
  SRB_STATUS_INVALID_CONFIG = 4,
  SRB_STATUS_HYPOTHESIS_VIOLATED = 5,
  SRB_STATUS_NUMERICAL = 6,
  SRB_STATUS_IO = 7,
  SRB_STATUS_BUFFER_TOO_SMALL = 8,
  SRB_STATUS_PANIC = 9,
} SrbStatus;

// Opaque map system.
typedef struct SrbSystem SrbSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *srb_version(void);

// Copies the calling thread's last error message into `buf` (truncated and
// NUL-terminated) and returns the full message length without the NUL;
// 0 when the last call succeeded. `buf` may be null to query the length.
//
// # Safety
// `buf` must be null or valid for `capacity` bytes.
size_t srb_last_error_message(char *buf, size_t capacity);

// Builds a model from its JSON description, such as `{"name": "dfa", "delta": 0.1}`.
//
// # Safety
// `model_json` must be a NUL-terminated string and `out` a valid pointer.
enum SrbStatus srb_system_new(const char *model_json, struct SrbSystem **out);

// Releases a system; null is ignored.
//
// # Safety
// `sys` must come from [`srb_system_new`] and not be used afterwards.
void srb_system_free(struct SrbSystem *sys);

// Model name, valid while the handle lives; null for a null handle.
//
// # Safety
// `sys` must be null or a live handle.
const char *srb_system_name(const struct SrbSystem *sys);

// Ambient dimension and the dimension of `F`.
//
// # Safety
// `sys` must be a live handle; `dim` and `dim_f` may be null.
enum SrbStatus srb_system_dims(const struct SrbSystem *sys, size_t *dim, size_t *dim_f);

// One forward iterate of `x` into `out` (both of length `dim`).
//
// # Safety
// `x` and `out` must be valid for `dim` doubles.
enum SrbStatus srb_system_forward(const struct SrbSystem *sys,
                                  const double *x,
                                  size_t dim,
                                  double *out);

// Cocycle logs along `n` steps from `x`: `log ‖Df|E‖` into `log_e` and
// `log ‖Df⁻¹|F‖` into `log_f_inv`. Either output may be null.
//
// # Safety
// `x` must be valid for `dim` doubles; non-null outputs for `n` doubles.
enum SrbStatus srb_cocycle_logs(const struct SrbSystem *sys,
                                const double *x,
                                size_t dim,
                                size_t n,
                                double *log_e,
                                double *log_f_inv);

// `σ`-hyperbolic times (1-based) of a `log ‖Df⁻¹|F‖` sequence. The number
// of times is written to `count` even when `capacity` is too small.
//
// # Safety
// `log_f_inv` must be valid for `n` doubles and `times` for `capacity`
// entries.
enum SrbStatus srb_hyperbolic_times(const double *log_f_inv,
                                    size_t n,
                                    double sigma,
                                    size_t *times,
                                    size_t capacity,
                                    size_t *count);

// Pliss times (1-based) of `b` for constants `C0 ≥ C1 > C2 ≥ 0`.
//
// # Safety
// `b` must be valid for `n` doubles and `times` for `capacity` entries.
enum SrbStatus srb_pliss_times(const double *b,
                               size_t n,
                               double c0,
                               double c1,
                               double c2,
                               size_t *times,
                               size_t capacity,
                               size_t *count);

// Runs an experiment config (JSON text). `output_dir` overrides the
// config's directory when non-null; `passed` receives whether every
// assertion held.
//
// # Safety
// String arguments must be NUL-terminated; `passed` may be null.
enum SrbStatus srb_run_experiment(const char *config_json, const char *output_dir, bool *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SRBKIT_H */
