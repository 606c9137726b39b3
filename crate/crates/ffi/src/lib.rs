//! C ABI for the povm-core library.
//!
//! Objects cross the boundary as opaque handles: the `povm_*_new`
//! constructors allocate them and the matching `povm_*_free` functions
//! release them. Every fallible call returns a [`PovmStatus`] and writes its
//! results through out-pointers, which stay untouched on failure. Handles
//! are immutable after construction, so sharing them between threads for
//! read-only calls is safe; creation and destruction of a given handle must
//! not race. No call unwinds across the boundary.

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use num_complex::Complex64;
use povm_core::filters::{FilterChain, FilterSpec};
use povm_core::povm::{closed_form_overlap, closed_form_purity, overlap_time, window_element};
use povm_core::spectral::{FrequencyGrid, TimeWindow};

/// Opaque handle to a uniform frequency grid.
pub struct PovmGrid {
    inner: Arc<FrequencyGrid>,
}

/// Opaque handle to a two-port frequency filter on a grid.
pub struct PovmFilter {
    inner: FilterSpec,
}

/// Status code returned by every fallible ABI call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PovmStatus {
    /// Success; all out-parameters are valid.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was rejected before any computation ran.
    InvalidArgument = 2,
    /// The computation failed (unreachable outcome, degenerate norm, …).
    Failed = 3,
    /// An internal invariant was violated; the out-parameters are untouched.
    Panic = 4,
}

fn classify(error: &povm_core::Error) -> PovmStatus {
    use povm_core::Error::*;
    match error {
        Domain { .. } | GridMismatch | LengthMismatch { .. } | NotNormalized { .. }
        | InvalidBasis(_) | IndexOutOfRange { .. } | NonMonotonicTimes | GridTooLarge { .. }
        | Config(_) => PovmStatus::InvalidArgument,
        _ => PovmStatus::Failed,
    }
}

/// Never let a panic unwind into the C caller.
fn guarded(f: impl FnOnce() -> PovmStatus) -> PovmStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(PovmStatus::Panic)
}

/// Version of the library as a static NUL-terminated string; never freed by
/// the caller.
#[no_mangle]
pub extern "C" fn povm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Create a uniform grid of `n_points` frequencies spanning
/// `[omega_min, omega_max]`. On success writes a handle to `out`.
///
/// # Safety
/// `out` must be a valid pointer. The returned handle must be released with
/// `povm_grid_free` exactly once.
#[no_mangle]
pub unsafe extern "C" fn povm_grid_new(
    omega_min: f64,
    omega_max: f64,
    n_points: usize,
    out: *mut *mut PovmGrid,
) -> PovmStatus {
    if out.is_null() {
        return PovmStatus::NullPointer;
    }
    guarded(|| match FrequencyGrid::new(omega_min, omega_max, n_points) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(PovmGrid { inner }));
            PovmStatus::Ok
        }
        Err(e) => classify(&e),
    })
}

/// Number of points of the grid.
///
/// # Safety
/// `grid` must be a live handle from `povm_grid_new` and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn povm_grid_n_points(grid: *const PovmGrid, out: *mut usize) -> PovmStatus {
    if grid.is_null() || out.is_null() {
        return PovmStatus::NullPointer;
    }
    *out = (*grid).inner.n_points();
    PovmStatus::Ok
}

/// Spacing between adjacent grid points.
///
/// # Safety
/// `grid` must be a live handle from `povm_grid_new` and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn povm_grid_spacing(grid: *const PovmGrid, out: *mut f64) -> PovmStatus {
    if grid.is_null() || out.is_null() {
        return PovmStatus::NullPointer;
    }
    *out = (*grid).inner.spacing();
    PovmStatus::Ok
}

/// Release a grid handle. Null is accepted and ignored.
///
/// # Safety
/// `grid` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn povm_grid_free(grid: *mut PovmGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Create a Lorentzian filter with resonance `omega0` and bandwidth `gamma`
/// sampled on `grid`. On success writes a handle to `out`.
///
/// # Safety
/// `grid` must be a live handle and `out` valid. The returned handle must be
/// released with `povm_filter_free` exactly once.
#[no_mangle]
pub unsafe extern "C" fn povm_filter_lorentzian(
    grid: *const PovmGrid,
    omega0: f64,
    gamma: f64,
    out: *mut *mut PovmFilter,
) -> PovmStatus {
    if grid.is_null() || out.is_null() {
        return PovmStatus::NullPointer;
    }
    let grid = (*grid).inner.clone();
    guarded(move || match FilterSpec::lorentzian(grid, omega0, gamma) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(PovmFilter { inner }));
            PovmStatus::Ok
        }
        Err(e) => classify(&e),
    })
}

/// Create a filter from tabulated complex transmission samples
/// (`re[i] + i·im[i]`, one per grid point); the reflection is completed so
/// the two-port response is unitary. `len` must equal the grid size.
///
/// # Safety
/// `grid` must be a live handle, `re` and `im` must point to `len` readable
/// doubles, and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn povm_filter_from_transmission(
    grid: *const PovmGrid,
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut PovmFilter,
) -> PovmStatus {
    if grid.is_null() || re.is_null() || im.is_null() || out.is_null() {
        return PovmStatus::NullPointer;
    }
    let grid = (*grid).inner.clone();
    if len != grid.n_points() {
        return PovmStatus::InvalidArgument;
    }
    let re = std::slice::from_raw_parts(re, len);
    let im = std::slice::from_raw_parts(im, len);
    let samples: Vec<Complex64> = re
        .iter()
        .zip(im)
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    guarded(move || match FilterSpec::from_transmission(grid, &samples) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(PovmFilter { inner }));
            PovmStatus::Ok
        }
        Err(e) => classify(&e),
    })
}

/// Release a filter handle. Null is accepted and ignored.
///
/// # Safety
/// `filter` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn povm_filter_free(filter: *mut PovmFilter) {
    if !filter.is_null() {
        drop(Box::from_raw(filter));
    }
}

/// Effective bandwidth (1/π)·∫|T|²dω of the filter on its grid.
///
/// # Safety
/// `filter` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn povm_filter_effective_bandwidth(
    filter: *const PovmFilter,
    out: *mut f64,
) -> PovmStatus {
    if filter.is_null() || out.is_null() {
        return PovmStatus::NullPointer;
    }
    *out = (*filter).inner.effective_bandwidth();
    PovmStatus::Ok
}

/// Worst pointwise violations of the two unitarity constraints,
/// max||T|²+|R|²−1| and max|T·R̄+T̄·R|.
///
/// # Safety
/// `filter` must be a live handle; `out_power` and `out_phase` valid.
#[no_mangle]
pub unsafe extern "C" fn povm_filter_unitarity_residuals(
    filter: *const PovmFilter,
    out_power: *mut f64,
    out_phase: *mut f64,
) -> PovmStatus {
    if filter.is_null() || out_power.is_null() || out_phase.is_null() {
        return PovmStatus::NullPointer;
    }
    let (power, phase) = (*filter).inner.unitarity_residuals();
    *out_power = power;
    *out_phase = phase;
    PovmStatus::Ok
}

/// Trace, purity, and effective dimension of the POVM element describing a
/// detector of efficiency `eta` watching the transmitted port during
/// `[t0, t0 + dt]`, discretized with `n_samples` midpoint instants.
///
/// # Safety
/// `filter` must be a live handle; the three out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn povm_window_stats(
    filter: *const PovmFilter,
    t0: f64,
    dt: f64,
    eta: f64,
    n_samples: usize,
    out_trace: *mut f64,
    out_purity: *mut f64,
    out_d_eff: *mut f64,
) -> PovmStatus {
    if filter.is_null() || out_trace.is_null() || out_purity.is_null() || out_d_eff.is_null() {
        return PovmStatus::NullPointer;
    }
    let filter = (*filter).inner.clone();
    guarded(move || {
        let run = || -> povm_core::Result<(f64, f64, f64)> {
            let window = TimeWindow::new(t0, dt, eta, n_samples)?;
            let chain = FilterChain::single(filter);
            let element = window_element(&chain, 0, &window)?;
            Ok((element.trace(), element.purity(), element.d_eff()))
        };
        match run() {
            Ok((trace, purity, d_eff)) => {
                *out_trace = trace;
                *out_purity = purity;
                *out_d_eff = d_eff;
                PovmStatus::Ok
            }
            Err(e) => classify(&e),
        }
    })
}

/// Overlap ⟨Ψ_t|Ψ_t′⟩ of two detection-time states at the transmitted port
/// of the filter, written as `out_re + i·out_im`.
///
/// # Safety
/// `filter` must be a live handle; `out_re` and `out_im` valid.
#[no_mangle]
pub unsafe extern "C" fn povm_overlap_time(
    filter: *const PovmFilter,
    t: f64,
    t_prime: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> PovmStatus {
    if filter.is_null() || out_re.is_null() || out_im.is_null() {
        return PovmStatus::NullPointer;
    }
    let filter = (*filter).inner.clone();
    guarded(move || {
        let chain = FilterChain::single(filter);
        match overlap_time(&chain, 0, t, t_prime) {
            Ok(value) => {
                *out_re = value.re;
                *out_im = value.im;
                PovmStatus::Ok
            }
            Err(e) => classify(&e),
        }
    })
}

/// Continuum overlap e^{−Γ|Δt|}·e^{iω₀Δt} of two detection-time states
/// behind a Lorentzian filter, written as `out_re + i·out_im`.
///
/// # Safety
/// `out_re` and `out_im` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn povm_closed_form_overlap(
    gamma: f64,
    omega0: f64,
    dt: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> PovmStatus {
    if out_re.is_null() || out_im.is_null() {
        return PovmStatus::NullPointer;
    }
    if !(gamma > 0.0) || !gamma.is_finite() || !omega0.is_finite() || !dt.is_finite() {
        return PovmStatus::InvalidArgument;
    }
    let value = closed_form_overlap(gamma, omega0, dt);
    *out_re = value.re;
    *out_im = value.im;
    PovmStatus::Ok
}

/// Continuum purity (e^{−2x} + 2x − 1)/(2x²) of a windowed detection
/// element behind a Lorentzian filter, with x = Γ·Δt.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn povm_closed_form_purity(x: f64, out: *mut f64) -> PovmStatus {
    if out.is_null() {
        return PovmStatus::NullPointer;
    }
    match closed_form_purity(x) {
        Ok(value) => {
            *out = value;
            PovmStatus::Ok
        }
        Err(e) => classify(&e),
    }
}
