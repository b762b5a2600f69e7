//! C ABI over `srbkit`.
//!
//! Every fallible call returns an [`SrbStatus`]; on failure the message is
//! kept per thread and read back with [`srb_last_error_message`]. Systems
//! are opaque handles created by [`srb_system_new`] and released with
//! [`srb_system_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use srbkit::dynamics::{cocycle_logs, MapSystem, Point};
use srbkit::harness::{run, ExperimentConfig};
use srbkit::models::{build, ModelSpec};
use srbkit::pliss::{hyperbolic_times, pliss_times, PlissParams};
use srbkit::Error;

/// Result codes of every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SrbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    InvalidConfig = 4,
    HypothesisViolated = 5,
    Numerical = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque map system.
pub struct SrbSystem {
    inner: Box<dyn MapSystem>,
    name: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: SrbStatus,
    message: String,
}

impl Failure {
    fn new(status: SrbStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::ConfigInvalid { .. } | Error::UnknownName { .. } | Error::Json(_) => SrbStatus::InvalidConfig,
            Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => SrbStatus::InvalidArgument,
            Error::HypothesisViolated(_) | Error::ChainInfeasible(_) | Error::ConstantsInvalid(_) => {
                SrbStatus::HypothesisViolated
            }
            Error::Io { .. } => SrbStatus::Io,
            _ => SrbStatus::Numerical,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> SrbStatus {
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|payload| {
        let message = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".to_string());
        Err(Failure::new(SrbStatus::Panic, message))
    });
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            SrbStatus::Ok
        }
        Err(f) => {
            set_last_error(&f.message);
            f.status
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::new(SrbStatus::NullPointer, format!("{what} is null")));
    }
    Ok(())
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(SrbStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn system<'a>(sys: *const SrbSystem) -> Result<&'a SrbSystem, Failure> {
    non_null(sys, "system")?;
    Ok(&*sys)
}

unsafe fn point(sys: &SrbSystem, x: *const f64, dim: usize) -> Result<Point, Failure> {
    non_null(x, "x")?;
    if dim != sys.inner.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.inner.dim(),
            got: dim,
        }
        .into());
    }
    Ok(Point::new(std::slice::from_raw_parts(x, dim).to_vec()))
}

/// Copies `values` into `out` when it fits; the length goes to `count`.
unsafe fn emit(values: &[usize], out: *mut usize, capacity: usize, count: *mut usize) -> Result<(), Failure> {
    non_null(count, "count")?;
    *count = values.len();
    if values.len() > capacity {
        return Err(Failure::new(
            SrbStatus::BufferTooSmall,
            format!("{} values do not fit in capacity {capacity}", values.len()),
        ));
    }
    if !values.is_empty() {
        non_null(out, "out")?;
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn srb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// NUL-terminated) and returns the full message length without the NUL;
/// 0 when the last call succeeded. `buf` may be null to query the length.
///
/// # Safety
/// `buf` must be null or valid for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn srb_last_error_message(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(msg) = slot.as_ref() else {
            if !buf.is_null() && capacity > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && capacity > 0 {
            let n = bytes.len().min(capacity - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Builds a model from its JSON description, such as `{"name": "dfa", "delta": 0.1}`.
///
/// # Safety
/// `model_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srb_system_new(model_json: *const c_char, out: *mut *mut SrbSystem) -> SrbStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let spec: ModelSpec = serde_json::from_str(text(model_json, "model_json")?)
            .map_err(|e| Failure::new(SrbStatus::InvalidConfig, format!("model: {e}")))?;
        let inner = build(&spec)?;
        let name = CString::new(spec.name()).unwrap_or_default();
        *out = Box::into_raw(Box::new(SrbSystem { inner, name }));
        Ok(())
    })
}

/// Releases a system; null is ignored.
///
/// # Safety
/// `sys` must come from [`srb_system_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn srb_system_free(sys: *mut SrbSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Model name, valid while the handle lives; null for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srb_system_name(sys: *const SrbSystem) -> *const c_char {
    if sys.is_null() {
        return ptr::null();
    }
    (*sys).name.as_ptr()
}

/// Ambient dimension and the dimension of `F`.
///
/// # Safety
/// `sys` must be a live handle; `dim` and `dim_f` may be null.
#[no_mangle]
pub unsafe extern "C" fn srb_system_dims(sys: *const SrbSystem, dim: *mut usize, dim_f: *mut usize) -> SrbStatus {
    guard(|| {
        let sys = system(sys)?;
        if !dim.is_null() {
            *dim = sys.inner.dim();
        }
        if !dim_f.is_null() {
            *dim_f = sys.inner.dim_f();
        }
        Ok(())
    })
}

/// One forward iterate of `x` into `out` (both of length `dim`).
///
/// # Safety
/// `x` and `out` must be valid for `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn srb_system_forward(
    sys: *const SrbSystem,
    x: *const f64,
    dim: usize,
    out: *mut f64,
) -> SrbStatus {
    guard(|| {
        let sys = system(sys)?;
        let p = point(sys, x, dim)?;
        non_null(out, "out")?;
        let y = sys.inner.forward(&p);
        ptr::copy_nonoverlapping(y.as_slice().as_ptr(), out, dim);
        Ok(())
    })
}

/// Cocycle logs along `n` steps from `x`: `log ‖Df|E‖` into `log_e` and
/// `log ‖Df⁻¹|F‖` into `log_f_inv`. Either output may be null.
///
/// # Safety
/// `x` must be valid for `dim` doubles; non-null outputs for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn srb_cocycle_logs(
    sys: *const SrbSystem,
    x: *const f64,
    dim: usize,
    n: usize,
    log_e: *mut f64,
    log_f_inv: *mut f64,
) -> SrbStatus {
    guard(|| {
        let sys = system(sys)?;
        let p = point(sys, x, dim)?;
        let c = cocycle_logs(sys.inner.as_ref(), &p, n)?;
        if !log_e.is_null() {
            ptr::copy_nonoverlapping(c.log_e().as_ptr(), log_e, n);
        }
        if !log_f_inv.is_null() {
            ptr::copy_nonoverlapping(c.log_f_inv().as_ptr(), log_f_inv, n);
        }
        Ok(())
    })
}

/// `σ`-hyperbolic times (1-based) of a `log ‖Df⁻¹|F‖` sequence. The number
/// of times is written to `count` even when `capacity` is too small.
///
/// # Safety
/// `log_f_inv` must be valid for `n` doubles and `times` for `capacity`
/// entries.
#[no_mangle]
pub unsafe extern "C" fn srb_hyperbolic_times(
    log_f_inv: *const f64,
    n: usize,
    sigma: f64,
    times: *mut usize,
    capacity: usize,
    count: *mut usize,
) -> SrbStatus {
    guard(|| {
        let seq = if n == 0 {
            &[][..]
        } else {
            non_null(log_f_inv, "log_f_inv")?;
            std::slice::from_raw_parts(log_f_inv, n)
        };
        let report = hyperbolic_times(seq, sigma)?;
        emit(&report.times, times, capacity, count)
    })
}

/// Pliss times (1-based) of `b` for constants `C0 ≥ C1 > C2 ≥ 0`.
///
/// # Safety
/// `b` must be valid for `n` doubles and `times` for `capacity` entries.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn srb_pliss_times(
    b: *const f64,
    n: usize,
    c0: f64,
    c1: f64,
    c2: f64,
    times: *mut usize,
    capacity: usize,
    count: *mut usize,
) -> SrbStatus {
    guard(|| {
        non_null(b, "b")?;
        let params = PlissParams::new(c0, c1, c2)?;
        let found = pliss_times(std::slice::from_raw_parts(b, n), &params)?;
        emit(&found, times, capacity, count)
    })
}

/// Runs an experiment config (JSON text). `output_dir` overrides the
/// config's directory when non-null; `passed` receives whether every
/// assertion held.
///
/// # Safety
/// String arguments must be NUL-terminated; `passed` may be null.
#[no_mangle]
pub unsafe extern "C" fn srb_run_experiment(
    config_json: *const c_char,
    output_dir: *const c_char,
    passed: *mut bool,
) -> SrbStatus {
    guard(|| {
        let mut cfg = ExperimentConfig::from_json(text(config_json, "config_json")?)?;
        if !output_dir.is_null() {
            cfg.output_dir = PathBuf::from(text(output_dir, "output_dir")?);
        }
        let summary = run(&cfg)?;
        if !passed.is_null() {
            *passed = summary.passed;
        }
        Ok(())
    })
}
