#ifndef BERGMAN_GAF_H
#define BERGMAN_GAF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call. On anything but `Ok`, `gaf_last_error` describes it.
 */
typedef enum GafStatus {
  GAF_STATUS_OK = 0,
  GAF_STATUS_NULL_POINTER = 1,
  GAF_STATUS_INVALID_ARGUMENT = 2,
  GAF_STATUS_NUMERICAL = 3,
  GAF_STATUS_CONFIG = 4,
  GAF_STATUS_IO = 5,
  GAF_STATUS_BUFFER_TOO_SMALL = 6,
  GAF_STATUS_PANIC = 7,
} GafStatus;

/*
 Weights constructible without a config.
 */
typedef enum GafWeightKind {
  GAF_WEIGHT_KIND_ZERO = 0,
  /*
   c |z|^2
   */
  GAF_WEIGHT_KIND_QUADRATIC = 1,
  /*
   max(log |z|, 0)
   */
  GAF_WEIGHT_KIND_MAX_LOG = 2,
} GafWeightKind;

/*
 Orthonormal basis of the weighted Bergman space H(nu), truncated at degree M.
 */
typedef struct GafBasis GafBasis;

/*
 One sampled Gaussian analytic function f_n.
 */
typedef struct GafSample GafSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the most recent failure on this thread; empty after a success. The
 pointer stays valid until the next call into this library on the same thread.
 */
const char *gaf_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *gaf_version(void);

/*
 Builds the basis of H(nu) on the disk of the given radius with monomials up to
 `degree` and default quadrature.

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum GafStatus gaf_basis_new_disk(double radius,
                                  enum GafWeightKind weight,
                                  double c,
                                  uint32_t n,
                                  uint32_t degree,
                                  struct GafBasis **out);

/*
 Builds the basis described by a config text (flat dotted TOML keys, the same
 format the `gaf` tool reads) for the given n.

 # Safety
 `config` must be a NUL-terminated string; `out` must be valid for one write.
 */
enum GafStatus gaf_basis_from_config(const char *config, uint32_t n, struct GafBasis **out);

/*
 Releases a basis. Null is ignored.

 # Safety
 `basis` must come from a `gaf_basis_*` constructor and not have been freed.
 */
void gaf_basis_free(struct GafBasis *basis);

/*
 Dimension D, maximal degree M, complex dimension N of the domain, and the
 orthonormality residual max|T*GT - I|.

 # Safety
 `basis` must be a live handle; each output pointer must be valid or null (skipped).
 */
enum GafStatus gaf_basis_info(const struct GafBasis *basis,
                              size_t *dim,
                              size_t *degree,
                              size_t *domain_dim,
                              double *residual);

/*
 log B_n(z, z) and u_n(z) = (1/2n) log B_n(z, z) at a point given as `len` doubles
 (re, im per coordinate).

 # Safety
 `basis` must be live; `coords` must hold `len` doubles; outputs valid or null.
 */
enum GafStatus gaf_kernel_diag(const struct GafBasis *basis,
                               const double *coords,
                               size_t len,
                               double *log_kernel,
                               double *envelope);

/*
 Draws f_n = Σ a_j σ_j with the stream (seed, experiment, n of the basis, trial).

 # Safety
 `basis` must be live; `out` must be valid for one write.
 */
enum GafStatus gaf_sample_new(const struct GafBasis *basis,
                              uint64_t seed,
                              uint32_t experiment,
                              uint64_t trial,
                              struct GafSample **out);

/*
 Releases a sample. Null is ignored.

 # Safety
 `sample` must come from `gaf_sample_new` and not have been freed.
 */
void gaf_sample_free(struct GafSample *sample);

/*
 f(z) for a point given as `len` doubles.

 # Safety
 `sample` must be live; `coords` must hold `len` doubles; `re`, `im` valid writes.
 */
enum GafStatus gaf_sample_eval(const struct GafSample *sample,
                               const double *coords,
                               size_t len,
                               double *re,
                               double *im);

/*
 Copies the monomial coefficients c = T a as (re, im) pairs into `out` (capacity
 `cap` doubles) and sets `count` to the number of coefficients. Returns
 `BufferTooSmall` with `count` set when `cap < 2 * count`.

 # Safety
 `sample` must be live; `out` must hold `cap` doubles (may be null when cap = 0);
 `count` must be valid.
 */
enum GafStatus gaf_sample_coefficients(const struct GafSample *sample,
                                       double *out,
                                       size_t cap,
                                       size_t *count);

/*
 Zeros of a one-variable sample in the closed disk |z| <= rho, as (re, im) pairs.
 Same buffer protocol as `gaf_sample_coefficients`.

 # Safety
 As for `gaf_sample_coefficients`.
 */
enum GafStatus gaf_sample_zeros(const struct GafSample *sample,
                                double rho,
                                double *out,
                                size_t cap,
                                size_t *count);

/*
 Runs the experiment named by the config text's `experiment` key, writes the report
 into `output_dir`, and sets `exit_code` to 0 (predicate held) or 2 (failed).

 # Safety
 `config` and `output_dir` must be NUL-terminated strings; `exit_code` valid.
 */
enum GafStatus gaf_run_experiment(const char *config, const char *output_dir, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BERGMAN_GAF_H */
