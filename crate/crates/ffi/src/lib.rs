//! C interface to `schatten-lab`.
//!
//! Every function returns an [`SlStatus`]; on failure the message is kept in a
//! thread-local slot readable through [`sl_last_error`]. Handles are opaque and
//! owned by the caller until passed to the matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use schatten_lab::besov::{continuous_besov_norm_p2, dyadic_besov_norm, BesovForm};
use schatten_lab::dyadic::{DyadicGrid, DyadicSystem, TruncationWindow};
use schatten_lab::error::LabError;
use schatten_lab::lab::config::{parse_symbol, parse_weight_pair, ExperimentConfig, ExperimentId, MAX_CELLS};
use schatten_lab::lab::{emit_report, run_experiment};
use schatten_lab::operators::{
    commutator, hilbert, multiplication, paraproduct, paraproduct_adjoint, petermichl_shift, weight_conjugate,
    OperatorMatrix,
};
use schatten_lab::schatten::{schatten_norm, singular_values, SingularSpectrum};
use schatten_lab::symbols::Symbol;
use schatten_lab::weights::WeightPair;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    InvalidConfiguration = 4,
    DivergedIntegral = 5,
    DegenerateWeight = 6,
    InvalidMatrix = 7,
    NoCover = 8,
    Infeasible = 9,
    BasisMismatch = 10,
    Io = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlGrid {
    Standard = 0,
    /// One-third shifted grid.
    Shifted = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlOperatorKind {
    Paraproduct = 0,
    ParaproductAdjoint = 1,
    /// `[M_b, H]`; always on the standard grid.
    Commutator = 2,
    /// `[M_b, Ш]`
    ShiftCommutator = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlBesovForm {
    Nu = 0,
    LambdaMuInverse = 1,
    LambdaInverseMu = 2,
}

/// Window `[lo, hi)` with scales `j_min..=j_max`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SlWindow {
    pub lo: f64,
    pub hi: f64,
    pub j_min: i32,
    pub j_max: i32,
}

pub struct SlSymbol(Symbol);

pub struct SlWeightPair(WeightPair);

pub struct SlOperator {
    op: OperatorMatrix,
    spectrum: Option<SingularSpectrum>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SlStatus, String);

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        let status = match &e {
            LabError::InvalidConfiguration(_) | LabError::ConfigParse(_) | LabError::ConfigSerialize(_) => {
                SlStatus::InvalidConfiguration
            }
            LabError::InvalidParameter(_) => SlStatus::InvalidArgument,
            LabError::DivergedIntegral { .. } => SlStatus::DivergedIntegral,
            LabError::DegenerateWeight(_) => SlStatus::DegenerateWeight,
            LabError::InvalidMatrix(_) => SlStatus::InvalidMatrix,
            LabError::NoCover { .. } => SlStatus::NoCover,
            LabError::Infeasible(_) => SlStatus::Infeasible,
            LabError::BasisMismatch(_) => SlStatus::BasisMismatch,
            LabError::Io(_) => SlStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: SlStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, recording any error or panic. Clears the last error on success.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SlStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside schatten-lab".into());
            SlStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(fail(SlStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(SlStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(SlStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(SlStatus::NullPointer, format!("{name} is null")))
}

fn window(w: SlWindow) -> Result<TruncationWindow, Failure> {
    let w = TruncationWindow::new(w.lo, w.hi, w.j_min, w.j_max)?;
    if w.n_cells() > MAX_CELLS {
        return Err(fail(SlStatus::Infeasible, format!("{} cells exceed the cap of {MAX_CELLS}", w.n_cells())));
    }
    Ok(w)
}

fn grid(g: SlGrid) -> DyadicGrid {
    match g {
        SlGrid::Standard => DyadicGrid::Standard,
        SlGrid::Shifted => DyadicGrid::ThirdShift,
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, NUL-terminated crate version.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses `sine:F`, `parabola`, `plateau`, `linear`, `const:C` or
/// `haar:J:K:COEF[+J:K:COEF...]`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_symbol_parse(spec: *const c_char, out: *mut *mut SlSymbol) -> SlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let s = parse_symbol(str_arg(spec, "spec")?)?;
        *out = Box::into_raw(Box::new(SlSymbol(s.build())));
        Ok(())
    })
}

/// # Safety
/// `s` must come from [`sl_symbol_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn sl_symbol_free(s: *mut SlSymbol) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Parses `MU/LAMBDA`, each weight `one`, `const:C`, `pow:E[@CENTER]` or `path:R:J:A`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_weight_pair_parse(spec: *const c_char, out: *mut *mut SlWeightPair) -> SlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let p = parse_weight_pair(str_arg(spec, "spec")?)?.build()?;
        *out = Box::into_raw(Box::new(SlWeightPair(p)));
        Ok(())
    })
}

/// # Safety
/// `w` must come from [`sl_weight_pair_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn sl_weight_pair_free(w: *mut SlWeightPair) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Builds `λ^{1/2} T μ^{-1/2}` on the finest cells of the window.
///
/// # Safety
/// Handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_operator_new(
    kind: SlOperatorKind,
    symbol: *const SlSymbol,
    pair: *const SlWeightPair,
    win: SlWindow,
    grid_kind: SlGrid,
    out: *mut *mut SlOperator,
) -> SlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let b = &ref_arg(symbol, "symbol")?.0;
        let pair = &ref_arg(pair, "pair")?.0;
        let w = window(win)?;
        let sys = DyadicSystem::new(grid(grid_kind), w)?;
        let t = match kind {
            SlOperatorKind::Paraproduct => paraproduct(b, &sys)?,
            SlOperatorKind::ParaproductAdjoint => paraproduct_adjoint(b, &sys)?,
            SlOperatorKind::Commutator => {
                let std = DyadicSystem::new(DyadicGrid::Standard, w)?;
                commutator(&multiplication(b, &std)?, &hilbert(&w)?)?
            }
            SlOperatorKind::ShiftCommutator => commutator(&multiplication(b, &sys)?, &petermichl_shift(&sys)?)?,
        };
        let op = weight_conjugate(&t, &pair.lambda, &pair.mu)?;
        *out = Box::into_raw(Box::new(SlOperator { op, spectrum: None }));
        Ok(())
    })
}

/// # Safety
/// `op` must come from [`sl_operator_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn sl_operator_free(op: *mut SlOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Matrix dimension `N` (the operator is `N × N`).
///
/// # Safety
/// `op` must be live and `n` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_operator_dim(op: *const SlOperator, n: *mut usize) -> SlStatus {
    guard(|| {
        *out_arg(n, "n")? = ref_arg(op, "op")?.op.n();
        Ok(())
    })
}

/// Copies the matrix in row-major order into `buf`, which must hold `N²` values.
///
/// # Safety
/// `op` must be live and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sl_operator_copy_matrix(op: *const SlOperator, buf: *mut f64, len: usize) -> SlStatus {
    guard(|| {
        let m = ref_arg(op, "op")?.op.matrix();
        let n = m.nrows();
        if buf.is_null() {
            return Err(fail(SlStatus::NullPointer, "buf is null"));
        }
        if len < n * n {
            return Err(fail(SlStatus::BufferTooSmall, format!("need {} values, got {len}", n * n)));
        }
        let dst = std::slice::from_raw_parts_mut(buf, n * n);
        for i in 0..n {
            for j in 0..n {
                dst[i * n + j] = m[(i, j)];
            }
        }
        Ok(())
    })
}

fn spectrum(op: &mut SlOperator) -> Result<&SingularSpectrum, Failure> {
    if op.spectrum.is_none() {
        op.spectrum = Some(singular_values(&op.op)?);
    }
    Ok(op.spectrum.as_ref().expect("just computed"))
}

/// Writes the nonincreasing singular values into `buf` and their count into
/// `count`. With `buf` null only `count` is written.
///
/// # Safety
/// `op` must be live, `count` valid, and `buf` null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sl_operator_singular_values(
    op: *mut SlOperator,
    buf: *mut f64,
    len: usize,
    count: *mut usize,
) -> SlStatus {
    guard(|| {
        let count = out_arg(count, "count")?;
        let op = out_arg(op, "op")?;
        let values = &spectrum(op)?.values;
        *count = values.len();
        if buf.is_null() {
            return Ok(());
        }
        if len < values.len() {
            return Err(fail(SlStatus::BufferTooSmall, format!("need {} values, got {len}", values.len())));
        }
        std::slice::from_raw_parts_mut(buf, values.len()).copy_from_slice(values);
        Ok(())
    })
}

/// `‖op‖_{S^p}` for `p > 0`.
///
/// # Safety
/// `op` must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_operator_schatten_norm(op: *mut SlOperator, p: f64, out: *mut f64) -> SlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let op = out_arg(op, "op")?;
        *out = schatten_norm(spectrum(op)?, p)?;
        Ok(())
    })
}

/// Dyadic Besov norm `‖b‖_{B^p}` in the chosen form over one grid.
///
/// # Safety
/// Handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_besov_dyadic(
    symbol: *const SlSymbol,
    pair: *const SlWeightPair,
    p: f64,
    win: SlWindow,
    grid_kind: SlGrid,
    form: SlBesovForm,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let b = &ref_arg(symbol, "symbol")?.0;
        let pair = &ref_arg(pair, "pair")?.0;
        let sys = DyadicSystem::new(grid(grid_kind), window(win)?)?;
        let form = match form {
            SlBesovForm::Nu => BesovForm::Nu,
            SlBesovForm::LambdaMuInverse => BesovForm::LambdaMuInverse,
            SlBesovForm::LambdaInverseMu => BesovForm::LambdaInverseMu,
        };
        *out = dyadic_besov_norm(b, pair, p, &sys, form)?.value;
        Ok(())
    })
}

/// Continuous `‖b‖_{B²_ν}` by quadrature; `error` may be null.
///
/// # Safety
/// Handles must be live, `out` valid, `error` null or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_besov_continuous_p2(
    symbol: *const SlSymbol,
    pair: *const SlWeightPair,
    win: SlWindow,
    out: *mut f64,
    error: *mut f64,
) -> SlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let b = &ref_arg(symbol, "symbol")?.0;
        let pair = &ref_arg(pair, "pair")?.0;
        let r = continuous_besov_norm_p2(b, pair, &window(win)?)?;
        *out = r.value;
        if let Some(e) = error.as_mut() {
            *e = r.error_estimate.unwrap_or(0.0);
        }
        Ok(())
    })
}

/// Runs experiment `E1`..`E8` from its defaults, writes its reports into
/// `out_dir` and stores whether every acceptance check held in `passed`.
///
/// # Safety
/// Strings must be NUL-terminated and `passed` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_certify(experiment: *const c_char, out_dir: *const c_char, passed: *mut bool) -> SlStatus {
    guard(|| {
        let passed = out_arg(passed, "passed")?;
        let id: ExperimentId = str_arg(experiment, "experiment")?.parse()?;
        let mut cfg = ExperimentConfig::default_for(id);
        cfg.out = Path::new(str_arg(out_dir, "out_dir")?).to_path_buf();
        let outcome = run_experiment(&cfg)?;
        emit_report(&outcome, &cfg, &cfg.out)?;
        *passed = outcome.passed();
        Ok(())
    })
}
