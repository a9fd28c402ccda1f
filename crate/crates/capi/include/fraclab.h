#ifndef FRACLAB_H
#define FRACLAB_H

/* Generated with cbindgen:0.29.4 */

/* This file is generated by cbindgen from the fraclab-capi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum FraclabStatus {
  FRACLAB_STATUS_OK = 0,
  FRACLAB_STATUS_NULL_POINTER = 1,
  FRACLAB_STATUS_INVALID_ARGUMENT = 2,
  FRACLAB_STATUS_NOT_CONVERGED = 3,
  FRACLAB_STATUS_OUT_OF_REGIME = 4,
  FRACLAB_STATUS_INTERNAL = 5,
} FraclabStatus;

/**
 * Opaque periodic lattice handle.
 */
typedef struct FraclabGrid FraclabGrid;

/**
 * Opaque Cauchy-problem handle (orders + datum + potential on a grid).
 */
typedef struct FraclabProblem FraclabProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the most recent error message into `buf` (truncated to `cap - 1`
 * bytes, always NUL-terminated when cap > 0). Returns the full message
 * length in bytes.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes, or be null (query mode).
 */
uintptr_t fraclab_last_error(char *buf, uintptr_t cap);

/**
 * Two-parameter Mittag-Leffler function E_{alpha,rho}(z).
 *
 * Writes the value into (`out_re`, `out_im`) and an absolute error estimate
 * into `est_error` (either may be null if not wanted).
 *
 * # Safety
 * Non-null output pointers must be valid for writes.
 */
enum FraclabStatus fraclab_ml_eval(double alpha,
                                   double rho,
                                   double re_z,
                                   double im_z,
                                   double *out_re,
                                   double *out_im,
                                   double *est_error);

/**
 * Create a periodic lattice on [-half_width, half_width)^dim with
 * n_per_dim points per dimension (power of two >= 8). Returns null on
 * invalid arguments (see `fraclab_last_error`).
 */
struct FraclabGrid *fraclab_grid_new(uint32_t dim, uint32_t n_per_dim, double half_width);

/**
 * Total number of lattice points (n_per_dim^dim).
 *
 * # Safety
 * `grid` must be a live handle from `fraclab_grid_new`.
 */
uintptr_t fraclab_grid_len(const struct FraclabGrid *grid);

/**
 * # Safety
 * `grid` must come from `fraclab_grid_new` and not be freed twice.
 */
void fraclab_grid_free(struct FraclabGrid *grid);

/**
 * Build a Cauchy problem. `datum` is interleaved re/im of length
 * 2 * grid_len; `potential` is real of length grid_len with values <= 0
 * (pass `delta0 > 0` to certify p <= -delta0). Returns null on invalid
 * arguments.
 *
 * # Safety
 * `grid` must be live; the arrays must match the documented lengths.
 */
struct FraclabProblem *fraclab_problem_new(const struct FraclabGrid *grid,
                                           double alpha,
                                           double beta,
                                           double gamma,
                                           const double *datum,
                                           const double *potential,
                                           double delta0);

/**
 * # Safety
 * `problem` must come from `fraclab_problem_new` and not be freed twice.
 */
void fraclab_problem_free(struct FraclabProblem *problem);

/**
 * Homogeneous propagator u^(xi,t) = E_{alpha,1}(-|xi|^beta t^alpha) a^(xi)
 * (the potential is ignored). `out` receives interleaved re/im of length
 * 2 * grid_len.
 *
 * # Safety
 * `problem` must be live; `out` must hold 2 * grid_len doubles.
 */
enum FraclabStatus fraclab_free_propagate(const struct FraclabProblem *problem,
                                          double t,
                                          double *out);

/**
 * Solve the full problem at time t by Laplace-resolvent contour inversion.
 *
 * # Safety
 * `problem` must be live; `out` must hold 2 * grid_len doubles.
 */
enum FraclabStatus fraclab_contour_solve(const struct FraclabProblem *problem,
                                         double t,
                                         double *out);

/**
 * Solve the full problem at time t by Picard iteration on the mild-solution
 * equation. Writes the iterate count into `iterates` when non-null.
 *
 * # Safety
 * `problem` must be live; `out` must hold 2 * grid_len doubles.
 */
enum FraclabStatus fraclab_picard_solve(const struct FraclabProblem *problem,
                                        double t,
                                        double tol,
                                        double *out,
                                        uint32_t *iterates);

/**
 * Sobolev (semi)norm of an interleaved complex lattice function.
 *
 * # Safety
 * `grid` must be live; `values` must hold 2 * grid_len doubles.
 */
enum FraclabStatus fraclab_sobolev_seminorm(const struct FraclabGrid *grid,
                                            const double *values,
                                            double gamma,
                                            double *out);

/**
 * Interval problem (0, length) with Dirichlet conditions: evolve the
 * sine-basis datum and return the eigen-coefficients at time t.
 *
 * `a_coeffs` has `basis` entries; `p_samples` holds `p_len` values of the
 * potential on the uniform closed grid x_q = q length / (p_len - 1)
 * (p_len - 1 a multiple of 4, >= 2 basis); `out_coeffs` receives `basis`
 * doubles.
 *
 * # Safety
 * All arrays must match the documented lengths.
 */
enum FraclabStatus fraclab_interval_evolve(double length,
                                           double alpha,
                                           double beta,
                                           uint32_t basis,
                                           const double *a_coeffs,
                                           const double *p_samples,
                                           uintptr_t p_len,
                                           double t,
                                           double *out_coeffs);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACLAB_H */
