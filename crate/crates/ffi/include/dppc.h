#ifndef DPPC_H
#define DPPC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum DppcStatus {
  DPPC_STATUS_OK = 0,
  /**
   * A null pointer, a short buffer or a malformed string was passed.
   */
  DPPC_STATUS_INVALID_ARGUMENT = 1,
  DPPC_STATUS_CONFIG = 2,
  DPPC_STATUS_NUMERICAL = 3,
  DPPC_STATUS_IO = 4,
  DPPC_STATUS_PANIC = 5,
} DppcStatus;

/**
 * A DPP L-ensemble in spectral form.
 */
typedef struct DppcKernel DppcKernel;

/**
 * A set of points in R^d.
 */
typedef struct DppcPointSet DppcPointSet;

/**
 * A weighted sample with its inclusion probabilities.
 */
typedef struct DppcSample DppcSample;

/**
 * Sample-size bounds for proportional inclusion probabilities.
 */
typedef struct DppcMuStar {
  double mu1;
  double mu2;
  double mu_star;
  bool min_sensitivity_condition;
} DppcMuStar;

typedef struct DppcCorollary {
  double alpha;
  double beta;
  double requirement;
  double implied_bound;
  bool satisfied;
  bool admissible;
} DppcCorollary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *dppc_last_error(void);

/**
 * Copies `n * d` row-major coordinates into a new point set.
 *
 * # Safety
 * `data` must point to `n * d` readable doubles and `out` must be writable.
 */
enum DppcStatus dppc_pointset_new(const double *data,
                                  size_t n,
                                  size_t d,
                                  struct DppcPointSet **out);

/**
 * Loads a CSV file; `header` skips the first line and `labels` reads the
 * last column as an integer label.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` must be writable.
 */
enum DppcStatus dppc_pointset_load_csv(const char *path,
                                       bool header,
                                       bool labels,
                                       struct DppcPointSet **out);

/**
 * # Safety
 * `points` must be null or a live handle.
 */
size_t dppc_pointset_len(const struct DppcPointSet *points);

/**
 * # Safety
 * `points` must be null or a live handle.
 */
size_t dppc_pointset_dim(const struct DppcPointSet *points);

/**
 * # Safety
 * `points` must be null or a handle not yet freed.
 */
void dppc_pointset_free(struct DppcPointSet *points);

/**
 * Gaussian L-ensemble approximated with `r` random Fourier frequencies.
 *
 * # Safety
 * `points` must be a live handle and `out` must be writable.
 */
enum DppcStatus dppc_kernel_rff(const struct DppcPointSet *points,
                                double s,
                                size_t r,
                                uint64_t seed,
                                struct DppcKernel **out);

/**
 * Exact Gaussian L-ensemble `exp(-|x - y|^2 / s^2)`.
 *
 * # Safety
 * `points` must be a live handle and `out` must be writable.
 */
enum DppcStatus dppc_kernel_exact(const struct DppcPointSet *points,
                                  double s,
                                  struct DppcKernel **out);

/**
 * Numerical rank of the kernel, the largest feasible m-DPP size.
 *
 * # Safety
 * `kernel` must be null or a live handle.
 */
size_t dppc_kernel_rank(const struct DppcKernel *kernel);

/**
 * # Safety
 * `kernel` must be null or a handle not yet freed.
 */
void dppc_kernel_free(struct DppcKernel *kernel);

/**
 * Inclusion probabilities of every point; `m = 0` selects the DPP, otherwise
 * the m-DPP of size `m`.
 *
 * # Safety
 * `kernel` must be a live handle and `out` must hold `capacity` doubles.
 */
enum DppcStatus dppc_kernel_marginals(const struct DppcKernel *kernel,
                                      size_t m,
                                      double *out,
                                      size_t capacity);

/**
 * Draws one sample; `m = 0` samples the DPP, otherwise the m-DPP of size `m`.
 *
 * # Safety
 * `kernel` must be a live handle and `out` must be writable.
 */
enum DppcStatus dppc_sample(const struct DppcKernel *kernel,
                            size_t m,
                            uint64_t seed,
                            struct DppcSample **out);

/**
 * # Safety
 * `sample` must be null or a live handle.
 */
size_t dppc_sample_len(const struct DppcSample *sample);

/**
 * Copies the sampled indices, weights `1 / pi` and inclusion probabilities.
 * Any of the output buffers may be null to skip it.
 *
 * # Safety
 * `sample` must be a live handle; non-null buffers must hold `capacity` items.
 */
enum DppcStatus dppc_sample_read(const struct DppcSample *sample,
                                 size_t *indices,
                                 double *weights,
                                 double *inclusion,
                                 size_t capacity);

/**
 * # Safety
 * `sample` must be null or a handle not yet freed.
 */
void dppc_sample_free(struct DppcSample *sample);

/**
 * Sensitivities for k-means: exact for `k = 1`, a bicriteria upper bound otherwise.
 * `total` receives their sum and may be null.
 *
 * # Safety
 * `points` must be a live handle and `out` must hold `capacity` doubles.
 */
enum DppcStatus dppc_sensitivity(const struct DppcPointSet *points,
                                 size_t k,
                                 uint64_t seed,
                                 double *out,
                                 size_t capacity,
                                 double *total);

/**
 * Expected sample size needed by a DPP with marginals `pi`, with `mu = sum(pi)`.
 *
 * # Safety
 * `sigma` and `pi` must hold `n` doubles and `out` must be writable.
 */
enum DppcStatus dppc_bound_mu_star(const double *sigma,
                                   const double *pi,
                                   size_t n,
                                   double epsilon,
                                   double delta,
                                   double log_n,
                                   struct DppcMuStar *out);

/**
 * Sample size needed by an m-DPP with marginals `pi`.
 *
 * # Safety
 * `sigma` and `pi` must hold `n` doubles and `out` must be writable.
 */
enum DppcStatus dppc_bound_m_star(const double *sigma,
                                  const double *pi,
                                  size_t n,
                                  double epsilon,
                                  double delta,
                                  double log_n,
                                  double *out);

/**
 * Conditions for marginals proportional to sensitivities; `fixed_size`
 * selects the m-DPP form.
 *
 * # Safety
 * `sigma` and `pi` must hold `n` doubles and `out` must be writable.
 */
enum DppcStatus dppc_bound_corollary(const double *sigma,
                                     const double *pi,
                                     size_t n,
                                     double epsilon,
                                     double delta,
                                     double log_n,
                                     double total,
                                     int fixed_size,
                                     struct DppcCorollary *out);

/**
 * Log covering number of the k-means parameter space.
 *
 * # Safety
 * `out` must be writable.
 */
enum DppcStatus dppc_bound_covering_log(double diameter,
                                        double epsilon,
                                        double mean_optimal_cost,
                                        size_t k,
                                        size_t d,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DPPC_H */
