//! C ABI for the qbkix boundary integral toolkit.
//!
//! Objects cross the boundary as opaque handles created by the
//! `qbkix_curve_*` and `qbkix_solve_*` functions and released with the
//! matching `*_free`. Every fallible call
//! returns a [`QbkixStatus`]; the message of the last failure on the calling
//! thread is available from [`qbkix_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qbkix::expansion::recommend_parameters;
use qbkix::fieldeval::evaluate_points;
use qbkix::geometry::{CurveShape, ParametricCurve};
use qbkix::kernels::{KernelSpec, Point};
use qbkix::solver::{solve_dirichlet, ApplyMode, Formulation, GmresOptions, MeshMode, Solution};
use qbkix::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QbkixStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Unsupported = 4,
    /// GMRES stopped at its iteration limit.
    MaxIterations = 5,
    Numeric = 6,
    Geometry = 7,
    SizeGuard = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QbkixFamily {
    Laplace = 0,
    Yukawa = 1,
    Helmholtz = 2,
    Stokes = 3,
    Navier = 4,
}

/// A kernel family with its parameter: `lambda` for Yukawa, `omega` for
/// Helmholtz, Poisson ratio `nu` for Navier; ignored otherwise.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QbkixKernel {
    pub family: QbkixFamily,
    pub parameter: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QbkixMode {
    Direct = 0,
    OneSided = 1,
    OneSidedExterior = 2,
    TwoSided = 3,
}

/// Recommended expansion parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QbkixParameters {
    pub delta_over_l: f64,
    pub k: usize,
    pub r_ratio: f64,
    pub theta: f64,
    pub beta: usize,
}

/// Boundary data callback: writes the `cdim` values at `(x, y)` to `out`.
/// It may be called from several threads at once.
pub type QbkixBoundaryFn = Option<unsafe extern "C" fn(x: f64, y: f64, out: *mut f64, user: *mut c_void)>;

/// Opaque closed boundary curve.
pub struct QbkixCurve {
    curve: ParametricCurve,
}

/// Opaque solved density with its mesh.
pub struct QbkixSolution {
    solution: Solution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(e: &Error) -> QbkixStatus {
    match e {
        Error::Config(_) => QbkixStatus::Config,
        Error::InvalidArgument(_) => QbkixStatus::InvalidArgument,
        Error::UnsupportedFamily { .. } => QbkixStatus::Unsupported,
        Error::MaxIterations { .. } => QbkixStatus::MaxIterations,
        Error::SizeGuard { .. } => QbkixStatus::SizeGuard,
        Error::OnBoundary { .. } | Error::CheckClearance { .. } | Error::RefinementFailed { .. } => QbkixStatus::Geometry,
        _ => QbkixStatus::Numeric,
    }
}

fn fail(e: Error) -> QbkixStatus {
    set_error(e.to_string());
    status_of(&e)
}

/// Runs `f`, turning panics into [`QbkixStatus::Panic`].
fn guard(f: impl FnOnce() -> QbkixStatus) -> QbkixStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            QbkixStatus::Panic
        }
    }
}

fn null(what: &str) -> QbkixStatus {
    set_error(format!("{what} is null"));
    QbkixStatus::NullPointer
}

fn kernel_spec(k: QbkixKernel) -> KernelSpec {
    match k.family {
        QbkixFamily::Laplace => KernelSpec::laplace(),
        QbkixFamily::Yukawa => KernelSpec::yukawa(k.parameter),
        QbkixFamily::Helmholtz => KernelSpec::helmholtz(k.parameter),
        QbkixFamily::Stokes => KernelSpec::stokes(),
        QbkixFamily::Navier => KernelSpec::navier(k.parameter),
    }
}

fn apply_mode(m: QbkixMode) -> ApplyMode {
    match m {
        QbkixMode::Direct => ApplyMode::DirectNystrom,
        QbkixMode::OneSided => ApplyMode::QbkixOneSided,
        QbkixMode::OneSidedExterior => ApplyMode::QbkixOneSidedExterior,
        QbkixMode::TwoSided => ApplyMode::QbkixTwoSided,
    }
}

unsafe fn new_curve(shape: CurveShape, out: *mut *mut QbkixCurve) -> QbkixStatus {
    if out.is_null() {
        return null("out");
    }
    *out = ptr::null_mut();
    match ParametricCurve::new(shape) {
        Ok(curve) => {
            *out = Box::into_raw(Box::new(QbkixCurve { curve }));
            QbkixStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qbkix_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qbkix_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn qbkix_curve_circle(r: f64, out: *mut *mut QbkixCurve) -> QbkixStatus {
    guard(|| new_curve(CurveShape::Circle { r }, out))
}

/// `X(t) = (r0 + amp cos(freq t)) (cos t, sin t)`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn qbkix_curve_star(r0: f64, amp: f64, freq: u32, out: *mut *mut QbkixCurve) -> QbkixStatus {
    guard(|| new_curve(CurveShape::Star { r0, amp, freq }, out))
}

/// Axis-aligned square centred at the origin.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn qbkix_curve_square(side: f64, out: *mut *mut QbkixCurve) -> QbkixStatus {
    guard(|| new_curve(CurveShape::Square { side, corner_rounding: 0.0 }, out))
}

/// # Safety
/// `curve` must come from a `qbkix_curve_*` constructor and not be freed
/// twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn qbkix_curve_free(curve: *mut QbkixCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Point on the curve at parameter `t`.
///
/// # Safety
/// `curve` must be a live handle; `xy` must hold two doubles.
#[no_mangle]
pub unsafe extern "C" fn qbkix_curve_position(curve: *const QbkixCurve, t: f64, xy: *mut f64) -> QbkixStatus {
    if curve.is_null() || xy.is_null() {
        return null("curve or xy");
    }
    let p = (*curve).curve.position(t);
    *xy = p[0];
    *xy.add(1) = p[1];
    QbkixStatus::Ok
}

struct Callback {
    f: unsafe extern "C" fn(f64, f64, *mut f64, *mut c_void),
    user: *mut c_void,
    cdim: usize,
}

// the caller promises the callback is thread-safe
unsafe impl Sync for Callback {}
unsafe impl Send for Callback {}

impl Callback {
    fn call(&self, x: Point) -> Vec<f64> {
        let mut v = vec![0.0; self.cdim];
        unsafe { (self.f)(x[0], x[1], v.as_mut_ptr(), self.user) };
        v
    }
}

/// Interior Dirichlet solve on a uniform mesh of `panels` panels with
/// 16 nodes each. On [`QbkixStatus::MaxIterations`] no handle is returned.
///
/// # Safety
/// `curve` must be a live handle, `data` a thread-safe callback writing
/// `cdim` doubles, and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn qbkix_solve_dirichlet(
    curve: *const QbkixCurve,
    kernel: QbkixKernel,
    mode: QbkixMode,
    panels: usize,
    tol: f64,
    max_iter: usize,
    data: QbkixBoundaryFn,
    user: *mut c_void,
    out: *mut *mut QbkixSolution,
) -> QbkixStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        if curve.is_null() {
            return null("curve");
        }
        let Some(f) = data else { return null("data") };
        let spec = kernel_spec(kernel);
        if let Err(e) = spec.validate() {
            return fail(e);
        }
        let cb = Callback { f, user, cdim: spec.cdim() };
        let form = Formulation::new(spec, apply_mode(mode));
        let opts = GmresOptions { tol, max_iter };
        let mesh = MeshMode::Uniform { panels, q: 16 };
        match solve_dirichlet(&(*curve).curve, &form, &|x| cb.call(x), &mesh, &opts) {
            Ok(solution) => {
                *out = Box::into_raw(Box::new(QbkixSolution { solution }));
                QbkixStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `sol` must come from [`qbkix_solve_dirichlet`] and not be freed twice.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn qbkix_solution_free(sol: *mut QbkixSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Number of density values (`nodes * cdim`), or 0 for a null handle.
///
/// # Safety
/// `sol` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn qbkix_solution_len(sol: *const QbkixSolution) -> usize {
    if sol.is_null() {
        0
    } else {
        (*sol).solution.density().len()
    }
}

/// GMRES iterations of the solve, or 0 for a null handle.
///
/// # Safety
/// `sol` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn qbkix_solution_iterations(sol: *const QbkixSolution) -> usize {
    if sol.is_null() {
        0
    } else {
        (*sol).solution.report.iterations
    }
}

/// Copies the density into `buf` of length `len`.
///
/// # Safety
/// `sol` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn qbkix_solution_density(sol: *const QbkixSolution, buf: *mut f64, len: usize) -> QbkixStatus {
    if sol.is_null() || buf.is_null() {
        return null("sol or buf");
    }
    let d = (*sol).solution.density();
    if len < d.len() {
        set_error(format!("buffer holds {len} values, density has {}", d.len()));
        return QbkixStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(d.as_ptr(), buf, d.len());
    QbkixStatus::Ok
}

/// Evaluates the solution at `n` points `(xs[i], ys[i])`, writing `n * cdim`
/// values to `out`. Points near the boundary use QBKIX.
///
/// # Safety
/// `sol` must be a live handle; `xs`, `ys` valid for `n` reads; `out` valid
/// for `n * cdim` writes.
#[no_mangle]
pub unsafe extern "C" fn qbkix_solution_evaluate(
    sol: *const QbkixSolution,
    xs: *const f64,
    ys: *const f64,
    n: usize,
    out: *mut f64,
) -> QbkixStatus {
    guard(|| {
        if sol.is_null() || out.is_null() || (n > 0 && (xs.is_null() || ys.is_null())) {
            return null("sol, xs, ys or out");
        }
        let s = &(*sol).solution;
        let pts: Vec<Point> = (0..n).map(|i| [*xs.add(i), *ys.add(i)]).collect();
        let form = &s.formulation;
        match evaluate_points(&s.mesh, &form.spec, form.layer(), s.density(), &pts, Some(&form.qbkix_config())) {
            Ok((vals, _)) => {
                ptr::copy_nonoverlapping(vals.as_ptr(), out, vals.len());
                QbkixStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Expansion parameters for target accuracy `eps` with `q`-node panels.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn qbkix_recommend_parameters(eps: f64, q: usize, out: *mut QbkixParameters) -> QbkixStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        match recommend_parameters(eps, q) {
            Ok(r) => {
                *out = QbkixParameters { delta_over_l: r.delta_over_l, k: r.k, r_ratio: r.r_ratio, theta: r.theta, beta: r.beta };
                QbkixStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
