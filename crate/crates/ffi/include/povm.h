#ifndef POVM_H
#define POVM_H

/* Generated by the povm-ffi build script; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible ABI call.
 */
typedef enum PovmStatus {
  /**
   * Success; all out-parameters are valid.
   */
  POVM_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  POVM_STATUS_NULL_POINTER = 1,
  /**
   * An argument was rejected before any computation ran.
   */
  POVM_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The computation failed (unreachable outcome, degenerate norm, …).
   */
  POVM_STATUS_FAILED = 3,
  /**
   * An internal invariant was violated; the out-parameters are untouched.
   */
  POVM_STATUS_PANIC = 4,
} PovmStatus;

/**
 * Opaque handle to a two-port frequency filter on a grid.
 */
typedef struct PovmFilter PovmFilter;

/**
 * Opaque handle to a uniform frequency grid.
 */
typedef struct PovmGrid PovmGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the library as a static NUL-terminated string; never freed by
 * the caller.
 */
const char *povm_version(void);

/**
 * Create a uniform grid of `n_points` frequencies spanning
 * `[omega_min, omega_max]`. On success writes a handle to `out`.
 *
 * # Safety
 * `out` must be a valid pointer. The returned handle must be released with
 * `povm_grid_free` exactly once.
 */
enum PovmStatus povm_grid_new(double omega_min,
                              double omega_max,
                              size_t n_points,
                              struct PovmGrid **out);

/**
 * Number of points of the grid.
 *
 * # Safety
 * `grid` must be a live handle from `povm_grid_new` and `out` valid.
 */
enum PovmStatus povm_grid_n_points(const struct PovmGrid *grid, size_t *out);

/**
 * Spacing between adjacent grid points.
 *
 * # Safety
 * `grid` must be a live handle from `povm_grid_new` and `out` valid.
 */
enum PovmStatus povm_grid_spacing(const struct PovmGrid *grid, double *out);

/**
 * Release a grid handle. Null is accepted and ignored.
 *
 * # Safety
 * `grid` must be null or a handle not freed before.
 */
void povm_grid_free(struct PovmGrid *grid);

/**
 * Create a Lorentzian filter with resonance `omega0` and bandwidth `gamma`
 * sampled on `grid`. On success writes a handle to `out`.
 *
 * # Safety
 * `grid` must be a live handle and `out` valid. The returned handle must be
 * released with `povm_filter_free` exactly once.
 */
enum PovmStatus povm_filter_lorentzian(const struct PovmGrid *grid,
                                       double omega0,
                                       double gamma,
                                       struct PovmFilter **out);

/**
 * Create a filter from tabulated complex transmission samples
 * (`re[i] + i·im[i]`, one per grid point); the reflection is completed so
 * the two-port response is unitary. `len` must equal the grid size.
 *
 * # Safety
 * `grid` must be a live handle, `re` and `im` must point to `len` readable
 * doubles, and `out` must be valid.
 */
enum PovmStatus povm_filter_from_transmission(const struct PovmGrid *grid,
                                              const double *re,
                                              const double *im,
                                              size_t len,
                                              struct PovmFilter **out);

/**
 * Release a filter handle. Null is accepted and ignored.
 *
 * # Safety
 * `filter` must be null or a handle not freed before.
 */
void povm_filter_free(struct PovmFilter *filter);

/**
 * Effective bandwidth (1/π)·∫|T|²dω of the filter on its grid.
 *
 * # Safety
 * `filter` must be a live handle and `out` valid.
 */
enum PovmStatus povm_filter_effective_bandwidth(const struct PovmFilter *filter, double *out);

/**
 * Worst pointwise violations of the two unitarity constraints,
 * max||T|²+|R|²−1| and max|T·R̄+T̄·R|.
 *
 * # Safety
 * `filter` must be a live handle; `out_power` and `out_phase` valid.
 */
enum PovmStatus povm_filter_unitarity_residuals(const struct PovmFilter *filter,
                                                double *out_power,
                                                double *out_phase);

/**
 * Trace, purity, and effective dimension of the POVM element describing a
 * detector of efficiency `eta` watching the transmitted port during
 * `[t0, t0 + dt]`, discretized with `n_samples` midpoint instants.
 *
 * # Safety
 * `filter` must be a live handle; the three out-pointers valid.
 */
enum PovmStatus povm_window_stats(const struct PovmFilter *filter,
                                  double t0,
                                  double dt,
                                  double eta,
                                  size_t n_samples,
                                  double *out_trace,
                                  double *out_purity,
                                  double *out_d_eff);

/**
 * Overlap ⟨Ψ_t|Ψ_t′⟩ of two detection-time states at the transmitted port
 * of the filter, written as `out_re + i·out_im`.
 *
 * # Safety
 * `filter` must be a live handle; `out_re` and `out_im` valid.
 */
enum PovmStatus povm_overlap_time(const struct PovmFilter *filter,
                                  double t,
                                  double t_prime,
                                  double *out_re,
                                  double *out_im);

/**
 * Continuum overlap e^{−Γ|Δt|}·e^{iω₀Δt} of two detection-time states
 * behind a Lorentzian filter, written as `out_re + i·out_im`.
 *
 * # Safety
 * `out_re` and `out_im` must be valid pointers.
 */
enum PovmStatus povm_closed_form_overlap(double gamma,
                                         double omega0,
                                         double dt,
                                         double *out_re,
                                         double *out_im);

/**
 * Continuum purity (e^{−2x} + 2x − 1)/(2x²) of a windowed detection
 * element behind a Lorentzian filter, with x = Γ·Δt.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PovmStatus povm_closed_form_purity(double x, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POVM_H */
