//! C ABI for the fraclab solvers.
//!
//! Conventions:
//! - opaque handles (`fraclab_grid`, `fraclab_problem`) own their data and
//!   must be released with the matching `_free`,
//! - complex lattice data crosses the boundary as interleaved re/im f64
//!   pairs in row-major order (`2 * fraclab_grid_len` doubles),
//! - every fallible call returns a `fraclab_status`; the most recent error
//!   message is available via `fraclab_last_error`.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use num_complex::Complex64;

use fraclab::cauchy::{
    contour_invert, free_propagate, picard_solve, CauchyProblem, SectorContour, SectorPoint,
};
use fraclab::error::Error;
use fraclab::ml::{ml, MlParams};
use fraclab::spectral::{Field, FractionalOrders, Potential, Representation, SpectralGrid};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FraclabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotConverged = 3,
    OutOfRegime = 4,
    Internal = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> FraclabStatus {
    match err {
        Error::NonConvergent(_) | Error::MaxIterations { .. } | Error::IterationStall { .. } => {
            FraclabStatus::NotConverged
        }
        Error::OutOfRegime(_) | Error::TailNotConverged { .. } => FraclabStatus::OutOfRegime,
        Error::Config(_)
        | Error::RepresentationMismatch { .. }
        | Error::NotInHomogeneousSpace { .. }
        | Error::DegenerateWindow(_)
        | Error::NotCoercive
        | Error::NotPositive(_)
        | Error::QuadratureUnderResolved(_)
        | Error::Inconclusive(_)
        | Error::AssertionFailure { .. } => FraclabStatus::InvalidArgument,
        Error::Io(_) => FraclabStatus::Internal,
    }
}

fn guarded(f: impl FnOnce() -> FraclabStatus) -> FraclabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic".into());
            FraclabStatus::Internal
        }
    }
}

/// Copy the most recent error message into `buf` (truncated to `cap - 1`
/// bytes, always NUL-terminated when cap > 0). Returns the full message
/// length in bytes.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null (query mode).
#[no_mangle]
pub unsafe extern "C" fn fraclab_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Two-parameter Mittag-Leffler function E_{alpha,rho}(z).
///
/// Writes the value into (`out_re`, `out_im`) and an absolute error estimate
/// into `est_error` (either may be null if not wanted).
///
/// # Safety
/// Non-null output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fraclab_ml_eval(
    alpha: f64,
    rho: f64,
    re_z: f64,
    im_z: f64,
    out_re: *mut f64,
    out_im: *mut f64,
    est_error: *mut f64,
) -> FraclabStatus {
    guarded(|| {
        let params = match MlParams::new(alpha, rho) {
            Ok(p) => p,
            Err(e) => {
                set_error(e.to_string());
                return FraclabStatus::InvalidArgument;
            }
        };
        match ml(params, Complex64::new(re_z, im_z)) {
            Ok(eval) => {
                if !out_re.is_null() {
                    *out_re = eval.value.re;
                }
                if !out_im.is_null() {
                    *out_im = eval.value.im;
                }
                if !est_error.is_null() {
                    *est_error = eval.est_error;
                }
                FraclabStatus::Ok
            }
            Err(e) => {
                let s = status_of(&e);
                set_error(e.to_string());
                s
            }
        }
    })
}

/// Opaque periodic lattice handle.
pub struct FraclabGrid {
    inner: Arc<SpectralGrid>,
}

/// Create a periodic lattice on [-half_width, half_width)^dim with
/// n_per_dim points per dimension (power of two >= 8). Returns null on
/// invalid arguments (see `fraclab_last_error`).
#[no_mangle]
pub extern "C" fn fraclab_grid_new(
    dim: u32,
    n_per_dim: u32,
    half_width: f64,
) -> *mut FraclabGrid {
    match SpectralGrid::new(dim as usize, n_per_dim as usize, half_width) {
        Ok(inner) => Box::into_raw(Box::new(FraclabGrid { inner })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Total number of lattice points (n_per_dim^dim).
///
/// # Safety
/// `grid` must be a live handle from `fraclab_grid_new`.
#[no_mangle]
pub unsafe extern "C" fn fraclab_grid_len(grid: *const FraclabGrid) -> usize {
    if grid.is_null() {
        return 0;
    }
    (*grid).inner.len()
}

/// # Safety
/// `grid` must come from `fraclab_grid_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fraclab_grid_free(grid: *mut FraclabGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Opaque Cauchy-problem handle (orders + datum + potential on a grid).
pub struct FraclabProblem {
    inner: CauchyProblem,
}

/// Build a Cauchy problem. `datum` is interleaved re/im of length
/// 2 * grid_len; `potential` is real of length grid_len with values <= 0
/// (pass `delta0 > 0` to certify p <= -delta0). Returns null on invalid
/// arguments.
///
/// # Safety
/// `grid` must be live; the arrays must match the documented lengths.
#[no_mangle]
pub unsafe extern "C" fn fraclab_problem_new(
    grid: *const FraclabGrid,
    alpha: f64,
    beta: f64,
    gamma: f64,
    datum: *const f64,
    potential: *const f64,
    delta0: f64,
) -> *mut FraclabProblem {
    if grid.is_null() || datum.is_null() || potential.is_null() {
        set_error("null pointer".into());
        return std::ptr::null_mut();
    }
    let g = (*grid).inner.clone();
    let n = g.len();
    let dslice = std::slice::from_raw_parts(datum, 2 * n);
    let pslice = std::slice::from_raw_parts(potential, n);
    let values: Vec<Complex64> = dslice
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    let build = || -> fraclab::Result<CauchyProblem> {
        let orders = FractionalOrders::new(alpha, beta, gamma)?;
        let a = Field::new(g.clone(), values, Representation::Physical)?;
        let p = Potential::new(g.clone(), pslice.to_vec(), delta0)?;
        CauchyProblem::new(orders, a, p)
    };
    match build() {
        Ok(inner) => Box::into_raw(Box::new(FraclabProblem { inner })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `problem` must come from `fraclab_problem_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fraclab_problem_free(problem: *mut FraclabProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

unsafe fn write_field(out: *mut f64, field: &Field) {
    let phys = field.to_physical();
    for (i, v) in phys.values().iter().enumerate() {
        *out.add(2 * i) = v.re;
        *out.add(2 * i + 1) = v.im;
    }
}

/// Homogeneous propagator u^(xi,t) = E_{alpha,1}(-|xi|^beta t^alpha) a^(xi)
/// (the potential is ignored). `out` receives interleaved re/im of length
/// 2 * grid_len.
///
/// # Safety
/// `problem` must be live; `out` must hold 2 * grid_len doubles.
#[no_mangle]
pub unsafe extern "C" fn fraclab_free_propagate(
    problem: *const FraclabProblem,
    t: f64,
    out: *mut f64,
) -> FraclabStatus {
    if problem.is_null() || out.is_null() {
        set_error("null pointer".into());
        return FraclabStatus::NullPointer;
    }
    guarded(|| match free_propagate(&(*problem).inner, t) {
        Ok(field) => {
            write_field(out, &field);
            FraclabStatus::Ok
        }
        Err(e) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
    })
}

/// Solve the full problem at time t by Laplace-resolvent contour inversion.
///
/// # Safety
/// `problem` must be live; `out` must hold 2 * grid_len doubles.
#[no_mangle]
pub unsafe extern "C" fn fraclab_contour_solve(
    problem: *const FraclabProblem,
    t: f64,
    out: *mut f64,
) -> FraclabStatus {
    if problem.is_null() || out.is_null() {
        set_error("null pointer".into());
        return FraclabStatus::NullPointer;
    }
    guarded(|| {
        let prob = &(*problem).inner;
        let solve = || -> fraclab::Result<Field> {
            let contour = SectorContour::auto(prob, t)?;
            contour_invert(prob, t, &contour)
        };
        match solve() {
            Ok(field) => {
                write_field(out, &field);
                FraclabStatus::Ok
            }
            Err(e) => {
                let s = status_of(&e);
                set_error(e.to_string());
                s
            }
        }
    })
}

/// Solve the full problem at time t by Picard iteration on the mild-solution
/// equation. Writes the iterate count into `iterates` when non-null.
///
/// # Safety
/// `problem` must be live; `out` must hold 2 * grid_len doubles.
#[no_mangle]
pub unsafe extern "C" fn fraclab_picard_solve(
    problem: *const FraclabProblem,
    t: f64,
    tol: f64,
    out: *mut f64,
    iterates: *mut u32,
) -> FraclabStatus {
    if problem.is_null() || out.is_null() {
        set_error("null pointer".into());
        return FraclabStatus::NullPointer;
    }
    guarded(|| {
        let prob = &(*problem).inner;
        let solve = || -> fraclab::Result<(Field, fraclab::cauchy::PicardReport)> {
            let z = SectorPoint::real(t, &prob.orders)?;
            picard_solve(prob, z, tol)
        };
        match solve() {
            Ok((field, report)) => {
                write_field(out, &field);
                if !iterates.is_null() {
                    *iterates = report.iterates_used as u32;
                }
                FraclabStatus::Ok
            }
            Err(e) => {
                let s = status_of(&e);
                set_error(e.to_string());
                s
            }
        }
    })
}

/// Sobolev (semi)norm of an interleaved complex lattice function.
///
/// # Safety
/// `grid` must be live; `values` must hold 2 * grid_len doubles.
#[no_mangle]
pub unsafe extern "C" fn fraclab_sobolev_seminorm(
    grid: *const FraclabGrid,
    values: *const f64,
    gamma: f64,
    out: *mut f64,
) -> FraclabStatus {
    if grid.is_null() || values.is_null() || out.is_null() {
        set_error("null pointer".into());
        return FraclabStatus::NullPointer;
    }
    guarded(|| {
        let g = (*grid).inner.clone();
        let n = g.len();
        let vslice = std::slice::from_raw_parts(values, 2 * n);
        let vals: Vec<Complex64> = vslice
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        match Field::new(g, vals, Representation::Physical) {
            Ok(f) => {
                *out = f.sobolev_seminorm(gamma);
                FraclabStatus::Ok
            }
            Err(e) => {
                let s = status_of(&e);
                set_error(e.to_string());
                s
            }
        }
    })
}

/// Interval problem (0, length) with Dirichlet conditions: evolve the
/// sine-basis datum and return the eigen-coefficients at time t.
///
/// `a_coeffs` has `basis` entries; `p_samples` holds `p_len` values of the
/// potential on the uniform closed grid x_q = q length / (p_len - 1)
/// (p_len - 1 a multiple of 4, >= 2 basis); `out_coeffs` receives `basis`
/// doubles.
///
/// # Safety
/// All arrays must match the documented lengths.
#[no_mangle]
pub unsafe extern "C" fn fraclab_interval_evolve(
    length: f64,
    alpha: f64,
    beta: f64,
    basis: u32,
    a_coeffs: *const f64,
    p_samples: *const f64,
    p_len: usize,
    t: f64,
    out_coeffs: *mut f64,
) -> FraclabStatus {
    if a_coeffs.is_null() || p_samples.is_null() || out_coeffs.is_null() {
        set_error("null pointer".into());
        return FraclabStatus::NullPointer;
    }
    guarded(|| {
        let a = std::slice::from_raw_parts(a_coeffs, basis as usize).to_vec();
        let p = std::slice::from_raw_parts(p_samples, p_len).to_vec();
        let run = || -> fraclab::Result<Vec<f64>> {
            let orders = FractionalOrders::new(alpha, beta, beta / 2.0)?;
            let problem = fraclab::bounded::IntervalProblem::new(length, orders, a, p)?;
            let eig = fraclab::bounded::eigen_solve(&fraclab::bounded::assemble_operator(
                &problem,
            )?)?;
            fraclab::bounded::evolve(&problem, &eig, t)
        };
        match run() {
            Ok(coeffs) => {
                for (i, c) in coeffs.iter().enumerate() {
                    *out_coeffs.add(i) = *c;
                }
                FraclabStatus::Ok
            }
            Err(e) => {
                let s = status_of(&e);
                set_error(e.to_string());
                s
            }
        }
    })
}
