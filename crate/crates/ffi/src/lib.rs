//! C interface to `irnn-core`.
//!
//! Every function returns an [`IrnnStatus`]. On failure a message is kept
//! per thread and can be read with [`irnn_last_error_message`]. Matrices
//! cross the boundary as row-major `double` buffers. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use irnn_core::harness::presets::{solve_completion, SolvePreset};
use irnn_core::harness::{psnr, relative_error};
use irnn_core::problems::MatrixCompletionProblem;
use irnn_core::prox::{svt, wsvt, WeightVector};
use irnn_core::solver::SolverTrace;
use irnn_core::{Error, Matrix, PenaltyKind, PenaltyParams};

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrnnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    Numeric = 4,
    Config = 5,
    Decomposition = 6,
    Panic = 7,
}

/// Penalty kind and parameters.
pub struct IrnnPenalty(PenaltyParams);

/// Observed entries of a matrix to complete.
pub struct IrnnCompletion(MatrixCompletionProblem);

/// Recovered matrix and per-stage traces.
pub struct IrnnResult {
    x: Matrix,
    stages: Vec<SolverTrace>,
}

/// Continuation and stopping settings for [`irnn_complete`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IrnnSolveOptions {
    /// Initial regularization; nonpositive means `lambda0_scale * max|observed|`.
    pub lambda0: f64,
    pub lambda0_scale: f64,
    pub eta: f64,
    pub lambda_t_factor: f64,
    /// Proximal weight as a multiple of the Lipschitz constant.
    pub mu_factor: f64,
    pub tol: f64,
    /// Iteration budget per continuation stage.
    pub max_iter: usize,
    /// Negative disables the observation-fit stop.
    pub fit_tol: f64,
    pub warm_start: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(IrnnStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Contract(_) => IrnnStatus::ShapeMismatch,
            Error::Numeric(_) | Error::Diverged { .. } | Error::Domain(_) => IrnnStatus::Numeric,
            Error::Config(_) => IrnnStatus::Config,
            Error::Decomposition(_) => IrnnStatus::Decomposition,
            _ => IrnnStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(IrnnStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(IrnnStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> IrnnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IrnnStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            IrnnStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn element_count(rows: usize, cols: usize) -> Result<usize, Failure> {
    rows.checked_mul(cols).ok_or_else(|| invalid("matrix size overflows"))
}

unsafe fn read_matrix(rows: usize, cols: usize, data: *const f64, what: &str) -> Result<Matrix, Failure> {
    let values = slice(data, element_count(rows, cols)?, what)?;
    Ok(Matrix::from_row_slice(rows, cols, values))
}

fn write_matrix(m: &Matrix, dst: &mut [f64]) {
    for (i, row) in dst.chunks_mut(m.ncols().max(1)).enumerate().take(m.nrows()) {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn irnn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a penalty from its name (`lp`, `scad`, `log`, `mcp`, `capped-l1`,
/// `etp`, `geman`, `laplace`, `nuclear`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out_penalty` writable.
#[no_mangle]
pub unsafe extern "C" fn irnn_penalty_new(
    name: *const c_char,
    lambda: f64,
    gamma: f64,
    p: f64,
    out_penalty: *mut *mut IrnnPenalty,
) -> IrnnStatus {
    guard(|| {
        let slot = out(out_penalty, "out_penalty")?;
        if name.is_null() {
            return Err(null("name"));
        }
        let name = CStr::from_ptr(name).to_str().map_err(|_| invalid("name is not UTF-8"))?;
        let kind: PenaltyKind = name.parse()?;
        let params = PenaltyParams::new(kind, lambda, gamma, p)?;
        *slot = Box::into_raw(Box::new(IrnnPenalty(params)));
        Ok(())
    })
}

/// # Safety
/// `penalty` must come from [`irnn_penalty_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn irnn_penalty_free(penalty: *mut IrnnPenalty) {
    if !penalty.is_null() {
        drop(Box::from_raw(penalty));
    }
}

/// `g(theta)`.
///
/// # Safety
/// `penalty` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn irnn_penalty_value(penalty: *const IrnnPenalty, theta: f64, out_value: *mut f64) -> IrnnStatus {
    guard(|| {
        let pen = handle(penalty, "penalty")?;
        *out(out_value, "out_value")? = pen.0.value(theta)?;
        Ok(())
    })
}

/// The canonical supergradient at `theta`; may be `+inf` at zero.
///
/// # Safety
/// `penalty` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn irnn_penalty_supergradient(
    penalty: *const IrnnPenalty,
    theta: f64,
    out_value: *mut f64,
) -> IrnnStatus {
    guard(|| {
        let pen = handle(penalty, "penalty")?;
        *out(out_value, "out_value")? = pen.0.supergradient(theta)?.value();
        Ok(())
    })
}

/// Builds a completion problem from `count` observed entries with zero-based
/// row and column indices.
///
/// # Safety
/// The three arrays must hold `count` elements; `out_problem` must be writable.
#[no_mangle]
pub unsafe extern "C" fn irnn_completion_new(
    rows: usize,
    cols: usize,
    count: usize,
    row_index: *const usize,
    col_index: *const usize,
    values: *const f64,
    out_problem: *mut *mut IrnnCompletion,
) -> IrnnStatus {
    guard(|| {
        let slot = out(out_problem, "out_problem")?;
        let ri = slice(row_index, count, "row_index")?;
        let ci = slice(col_index, count, "col_index")?;
        let vs = slice(values, count, "values")?;
        let entries: Vec<_> = (0..count).map(|k| (ri[k], ci[k], vs[k])).collect();
        let problem = MatrixCompletionProblem::from_entries(rows, cols, &entries)?;
        *slot = Box::into_raw(Box::new(IrnnCompletion(problem)));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from [`irnn_completion_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn irnn_completion_free(problem: *mut IrnnCompletion) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

fn preset_options(p: SolvePreset) -> IrnnSolveOptions {
    IrnnSolveOptions {
        lambda0: p.lambda0.unwrap_or(0.0),
        lambda0_scale: p.lambda0_scale,
        eta: p.eta,
        lambda_t_factor: p.lambda_t_factor,
        mu_factor: p.mu_factor,
        tol: p.tol,
        max_iter: p.max_iter,
        fit_tol: p.fit_tol.unwrap_or(-1.0),
        warm_start: p.warm_start,
    }
}

/// Defaults for noise-free (`noisy == false`) or noisy observations.
#[no_mangle]
pub extern "C" fn irnn_solve_options_default(noisy: bool) -> IrnnSolveOptions {
    preset_options(if noisy { SolvePreset::noisy() } else { SolvePreset::noise_free() })
}

/// Runs the continuation solver.
///
/// # Safety
/// Handles must be live, `options` readable and `out_result` writable.
#[no_mangle]
pub unsafe extern "C" fn irnn_complete(
    problem: *const IrnnCompletion,
    penalty: *const IrnnPenalty,
    options: *const IrnnSolveOptions,
    out_result: *mut *mut IrnnResult,
) -> IrnnStatus {
    guard(|| {
        let slot = out(out_result, "out_result")?;
        let problem = handle(problem, "problem")?;
        let pen = handle(penalty, "penalty")?;
        let o = handle(options, "options")?;
        let preset = SolvePreset {
            lambda0: (o.lambda0 > 0.0).then_some(o.lambda0),
            lambda0_scale: o.lambda0_scale,
            eta: o.eta,
            lambda_t_factor: o.lambda_t_factor,
            mu_factor: o.mu_factor,
            tol: o.tol,
            max_iter: o.max_iter,
            fit_tol: (o.fit_tol >= 0.0).then_some(o.fit_tol),
            warm_start: o.warm_start,
            ..SolvePreset::noise_free()
        };
        let (x, stages) = solve_completion(&problem.0, &pen.0, &preset)?;
        *slot = Box::into_raw(Box::new(IrnnResult { x, stages }));
        Ok(())
    })
}

/// # Safety
/// `result` must come from [`irnn_complete`] or be null.
#[no_mangle]
pub unsafe extern "C" fn irnn_result_free(result: *mut IrnnResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `result` must be live; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn irnn_result_shape(result: *const IrnnResult, out_rows: *mut usize, out_cols: *mut usize) -> IrnnStatus {
    guard(|| {
        let r = handle(result, "result")?;
        *out(out_rows, "out_rows")? = r.x.nrows();
        *out(out_cols, "out_cols")? = r.x.ncols();
        Ok(())
    })
}

/// Copies the recovered matrix row-major into `buffer` of `len` doubles.
///
/// # Safety
/// `result` must be live and `buffer` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn irnn_result_copy(result: *const IrnnResult, buffer: *mut f64, len: usize) -> IrnnStatus {
    guard(|| {
        let r = handle(result, "result")?;
        let need = r.x.len();
        if len != need {
            return Err(Failure(IrnnStatus::ShapeMismatch, format!("buffer holds {len} values, need {need}")));
        }
        write_matrix(&r.x, slice_mut(buffer, len, "buffer")?);
        Ok(())
    })
}

/// Total iterations, number of continuation stages and final objective.
///
/// # Safety
/// `result` must be live; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn irnn_result_summary(
    result: *const IrnnResult,
    out_iterations: *mut usize,
    out_stages: *mut usize,
    out_objective: *mut f64,
) -> IrnnStatus {
    guard(|| {
        let r = handle(result, "result")?;
        *out(out_iterations, "out_iterations")? = r.stages.iter().map(|s| s.iterations).sum();
        *out(out_stages, "out_stages")? = r.stages.len();
        *out(out_objective, "out_objective")? =
            r.stages.last().and_then(SolverTrace::final_objective).unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Weighted singular value thresholding of a row-major `rows x cols`
/// matrix with `min(rows, cols)` nondecreasing weights (`+inf` allowed).
///
/// # Safety
/// `y` and `out_x` must hold `rows * cols` doubles, `weights` `min(rows, cols)`.
#[no_mangle]
pub unsafe extern "C" fn irnn_wsvt(
    rows: usize,
    cols: usize,
    y: *const f64,
    weights: *const f64,
    scale: f64,
    out_x: *mut f64,
) -> IrnnStatus {
    guard(|| {
        let ym = read_matrix(rows, cols, y, "y")?;
        let w = WeightVector::from_values(slice(weights, rows.min(cols), "weights")?)?;
        let x = wsvt(&ym, &w, scale)?;
        write_matrix(&x, slice_mut(out_x, element_count(rows, cols)?, "out_x")?);
        Ok(())
    })
}

/// Singular value thresholding with threshold `tau`.
///
/// # Safety
/// `y` and `out_x` must hold `rows * cols` doubles.
#[no_mangle]
pub unsafe extern "C" fn irnn_svt(rows: usize, cols: usize, y: *const f64, tau: f64, out_x: *mut f64) -> IrnnStatus {
    guard(|| {
        let ym = read_matrix(rows, cols, y, "y")?;
        let x = svt(&ym, tau)?;
        write_matrix(&x, slice_mut(out_x, element_count(rows, cols)?, "out_x")?);
        Ok(())
    })
}

/// `||x_hat - m||_F / ||m||_F` for row-major matrices.
///
/// # Safety
/// `x_hat` and `m` must hold `rows * cols` doubles; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn irnn_relative_error(
    rows: usize,
    cols: usize,
    x_hat: *const f64,
    m: *const f64,
    out_value: *mut f64,
) -> IrnnStatus {
    guard(|| {
        let a = read_matrix(rows, cols, x_hat, "x_hat")?;
        let b = read_matrix(rows, cols, m, "m")?;
        *out(out_value, "out_value")? = relative_error(&a, &b)?;
        Ok(())
    })
}

/// PSNR in dB of `len` 8-bit samples stored as doubles; `+inf` when equal.
///
/// # Safety
/// Both arrays must hold `len` doubles; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn irnn_psnr(len: usize, x_hat: *const f64, reference: *const f64, out_value: *mut f64) -> IrnnStatus {
    guard(|| {
        let a = slice(x_hat, len, "x_hat")?;
        let b = slice(reference, len, "reference")?;
        *out(out_value, "out_value")? = psnr(a, b)?;
        Ok(())
    })
}
