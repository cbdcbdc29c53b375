/* Copyright 2026 The sslab Authors */
/* SPDX-License-Identifier: Apache-2.0 */

#ifndef SSLAB_H
#define SSLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. Validation, numerical and I/O failures share their values
// with the command-line exit codes.
typedef enum SslabStatus {
  SSLAB_STATUS_OK = 0,
  SSLAB_STATUS_NULL_POINTER = 1,
  SSLAB_STATUS_VALIDATION = 2,
  SSLAB_STATUS_NUMERICAL = 3,
  SSLAB_STATUS_IO = 4,
  SSLAB_STATUS_INTERNAL = 5,
} SslabStatus;

typedef enum SslabSymmetry {
  SSLAB_SYMMETRY_STRONG = 0,
  SSLAB_SYMMETRY_WEAK = 1,
  SSLAB_SYMMETRY_NONE = 2,
} SslabSymmetry;

typedef enum SslabSectorKind {
  // Left and right charges `(a, b)`.
  SSLAB_SECTOR_KIND_PAIR = 0,
  // Charge difference `a`; `b` is ignored.
  SSLAB_SECTOR_KIND_DIFFERENCE = 1,
} SslabSectorKind;

// Opaque Lindbladian.
typedef struct SslabModel SslabModel;

// Opaque experiment result.
typedef struct SslabResult SslabResult;

// A charge sector of the doubled space.
typedef struct SslabSector {
  enum SslabSectorKind kind;
  int64_t a;
  int64_t b;
} SslabSector;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null after a success.
// The pointer stays valid until the next sslab call on the same thread.
const char *sslab_last_error(void);

// Library version as a static nul-terminated string.
const char *sslab_version(void);

// Model I on a periodic chain (`ndim = 1`) or square lattice (`ndim = 2`).
//
// # Safety
// `extents` must point to `ndim` values and `out` must be writable.
enum SslabStatus sslab_model_i_new(const size_t *extents,
                                   size_t ndim,
                                   double j,
                                   double jz,
                                   double gamma,
                                   struct SslabModel **out);

// Model II on the full spin-1/2 space.
//
// # Safety
// As for [`sslab_model_i_new`].
enum SslabStatus sslab_model_ii_new(const size_t *extents,
                                    size_t ndim,
                                    double j,
                                    double jz,
                                    double gamma,
                                    double gamma_z,
                                    struct SslabModel **out);

// Model III on a ring of `l` spins of size `two_s / 2`.
//
// # Safety
// `out` must be writable.
enum SslabStatus sslab_model_iii_new(size_t l,
                                     uint32_t two_s,
                                     double jxy,
                                     double jz,
                                     double gamma,
                                     struct SslabModel **out);

// Releases a model. Null is accepted.
//
// # Safety
// `model` must come from an sslab constructor and not be used afterwards.
void sslab_model_free(struct SslabModel *model);

// Hilbert-space dimension D; density matrices are D×D.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum SslabStatus sslab_model_hilbert_dim(const struct SslabModel *model, size_t *out);

// Applies the generator to a row-major D×D operator given as separate real
// and imaginary arrays of length `len = D²`.
//
// # Safety
// All four arrays must hold `len` values; outputs may not alias inputs.
enum SslabStatus sslab_model_apply(const struct SslabModel *model,
                                   const double *rho_re,
                                   const double *rho_im,
                                   double *out_re,
                                   double *out_im,
                                   size_t len);

// U(1) symmetry class of the model under its total charge.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum SslabStatus sslab_model_symmetry(const struct SslabModel *model, enum SslabSymmetry *out);

// Up to `capacity` slowest eigenvalues of one sector block, sorted by
// descending real part, and the sector gap. `*out_len` receives the number
// written. An empty sector writes nothing and a gap of zero.
//
// # Safety
// `out_re` and `out_im` must hold `capacity` values; `out_len` and `out_gap`
// must be writable.
enum SslabStatus sslab_model_sector_spectrum(const struct SslabModel *model,
                                             struct SslabSector sector,
                                             size_t capacity,
                                             double *out_re,
                                             double *out_im,
                                             size_t *out_len,
                                             double *out_gap);

// Filling at which the symmetric model II mean-field point turns unstable,
// bisected on `[lo, hi]` to `tol`.
//
// # Safety
// `out` must be writable.
enum SslabStatus sslab_meanfield_ii_threshold(double j,
                                              double gamma,
                                              size_t d,
                                              double lo,
                                              double hi,
                                              double tol,
                                              double *out);

// Parses and runs an experiment config (the CLI file format, including the
// `experiment` key). `seed` may be null to use the config's seed.
//
// # Safety
// `config` must be a nul-terminated UTF-8 string; `seed` null or readable;
// `out` writable.
enum SslabStatus sslab_run_config(const char *config,
                                  const uint64_t *seed,
                                  struct SslabResult **out);

// Result metadata and summary as JSON. The string is owned by the handle.
//
// # Safety
// `result` must be a live handle.
const char *sslab_result_json(const struct SslabResult *result);

// A numeric summary entry by name.
//
// # Safety
// `result` must be a live handle, `key` a nul-terminated string and `out`
// writable.
enum SslabStatus sslab_result_summary(const struct SslabResult *result,
                                      const char *key,
                                      double *out);

// Writes the result tables and metadata into directory `dir`.
//
// # Safety
// `result` must be a live handle and `dir` a nul-terminated UTF-8 path.
enum SslabStatus sslab_result_write(const struct SslabResult *result, const char *dir);

// Releases a result. Null is accepted.
//
// # Safety
// `result` must come from [`sslab_run_config`] and not be used afterwards.
void sslab_result_free(struct SslabResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SSLAB_H */
