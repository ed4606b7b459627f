//! C ABI over the `skorokhod` library.
//!
//! Traces and formulas are exposed as opaque heap handles that the caller
//! releases with the matching `*_free` function. Every fallible call returns
//! an [`SkdStatus`]; on failure a description is available from
//! [`skd_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use skorokhod::engine::{check_within, compute_distance, WindowParam};
use skorokhod::logic::{evaluate, parse_formula, relax, to_nnf, Domain, Formula, RelaxationContext};
use skorokhod::trace::{parse_predicate_table, read_csv_file, PolygonalTrace, SampledTrace};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Engine = 4,
    Logic = 5,
    Io = 6,
    Panic = 7,
}

/// A polygonal trace.
pub struct SkdTrace(PolygonalTrace);

/// A parsed formula.
pub struct SkdFormula(Formula);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: SkdStatus, msg: impl ToString) -> SkdStatus {
    let text = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
    status
}

fn guard(f: impl FnOnce() -> SkdStatus) -> SkdStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(SkdStatus::Panic, "panic inside skorokhod"))
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, SkdStatus> {
    if p.is_null() {
        return Err(fail(SkdStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SkdStatus::InvalidArgument, "string is not valid UTF-8"))
}

fn window(w: usize) -> WindowParam {
    if w == 0 {
        WindowParam::Unbounded
    } else {
        WindowParam::Finite(w)
    }
}

macro_rules! non_null {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            return fail(SkdStatus::NullPointer, "null pointer argument");
        }
    };
}

/// Message describing the last failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn skd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a trace from `len` timestamps and a row-major `len * dim` value
/// buffer.
///
/// # Safety
/// `times` must point to `len` doubles, `values` to `len * dim` doubles and
/// `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn skd_trace_new(
    times: *const f64,
    values: *const f64,
    len: usize,
    dim: usize,
    out: *mut *mut SkdTrace,
) -> SkdStatus {
    non_null!(times, values, out);
    guard(|| {
        let Some(total) = len.checked_mul(dim) else {
            return fail(SkdStatus::InvalidArgument, "trace size overflows");
        };
        let ts = std::slice::from_raw_parts(times, len).to_vec();
        let vs = std::slice::from_raw_parts(values, total).to_vec();
        match SampledTrace::new(ts, vs, dim) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(SkdTrace(t.into())));
                SkdStatus::Ok
            }
            Err(e) => fail(SkdStatus::InvalidArgument, e),
        }
    })
}

/// Reads a CSV trace with time in the first column.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn skd_trace_from_csv(path: *const c_char, out: *mut *mut SkdTrace) -> SkdStatus {
    non_null!(out);
    guard(|| {
        let path = match c_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match read_csv_file(path) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(SkdTrace(t.into())));
                SkdStatus::Ok
            }
            Err(e @ skorokhod::Error::Io { .. }) => fail(SkdStatus::Io, e),
            Err(e) => fail(SkdStatus::Parse, e),
        }
    })
}

/// # Safety
/// `trace` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn skd_trace_free(trace: *mut SkdTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn skd_trace_len(trace: *const SkdTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.samples().len())
}

/// Value dimension, or 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn skd_trace_dim(trace: *const SkdTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.dim())
}

/// Skorokhod distance within `tol`. A `window_radius` of 0 means unbounded.
/// `monitor_calls` may be null.
///
/// # Safety
/// `a` and `b` must be live handles; `distance` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skd_distance(
    a: *const SkdTrace,
    b: *const SkdTrace,
    window_radius: usize,
    tol: f64,
    distance: *mut f64,
    monitor_calls: *mut usize,
) -> SkdStatus {
    non_null!(a, b, distance);
    guard(
        || match compute_distance(&(*a).0, &(*b).0, window(window_radius), tol) {
            Ok(r) => {
                *distance = r.distance;
                if !monitor_calls.is_null() {
                    *monitor_calls = r.monitor_calls;
                }
                SkdStatus::Ok
            }
            Err(e) => fail(SkdStatus::Engine, e),
        },
    )
}

/// Decides whether the distance is at most `delta`.
///
/// # Safety
/// `a` and `b` must be live handles; `within` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skd_check_within(
    a: *const SkdTrace,
    b: *const SkdTrace,
    delta: f64,
    window_radius: usize,
    within: *mut bool,
) -> SkdStatus {
    non_null!(a, b, within);
    guard(|| match check_within(&(*a).0, &(*b).0, delta, window(window_radius)) {
        Ok(v) => {
            *within = v;
            SkdStatus::Ok
        }
        Err(e) => fail(SkdStatus::Engine, e),
    })
}

/// Parses a formula.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn skd_formula_parse(text: *const c_char, out: *mut *mut SkdFormula) -> SkdStatus {
    non_null!(out);
    guard(|| {
        let text = match c_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_formula(text) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(SkdFormula(f)));
                SkdStatus::Ok
            }
            Err(e) => fail(SkdStatus::Parse, e),
        }
    })
}

/// # Safety
/// `formula` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn skd_formula_free(formula: *mut SkdFormula) {
    if !formula.is_null() {
        drop(Box::from_raw(formula));
    }
}

/// Formula text; release it with [`skd_string_free`]. Null on a null handle.
///
/// # Safety
/// `formula` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn skd_formula_to_string(formula: *const SkdFormula) -> *mut c_char {
    match formula.as_ref() {
        Some(f) => CString::new(f.0.to_string()).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn skd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Relaxes the negation normal form of `formula` by `delta` over the time
/// domain `[lo, hi]`. Formulas with signal constraints are not supported
/// through this entry point.
///
/// # Safety
/// `formula` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn skd_formula_relax(
    formula: *const SkdFormula,
    delta: f64,
    lo: f64,
    hi: f64,
    out: *mut *mut SkdFormula,
) -> SkdStatus {
    non_null!(formula, out);
    guard(|| {
        let domain = match Domain::new(lo, hi) {
            Ok(d) => d,
            Err(e) => return fail(SkdStatus::InvalidArgument, e),
        };
        let nnf = to_nnf(&(*formula).0);
        match relax(&nnf, &RelaxationContext::new(delta, domain)) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(SkdFormula(f)));
                SkdStatus::Ok
            }
            Err(e) => fail(SkdStatus::Logic, e),
        }
    })
}

/// Evaluates `formula` on `trace` from its start. `preds_json` is a JSON
/// predicate table and may be null when the formula names no propositions.
///
/// # Safety
/// Handles must be live, `preds_json` null or NUL-terminated, `holds`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn skd_formula_eval(
    formula: *const SkdFormula,
    trace: *const SkdTrace,
    preds_json: *const c_char,
    holds: *mut bool,
) -> SkdStatus {
    non_null!(formula, trace, holds);
    guard(|| {
        let preds = if preds_json.is_null() {
            Vec::new()
        } else {
            match c_str(preds_json).map(parse_predicate_table) {
                Ok(Ok(p)) => p,
                Ok(Err(e)) => return fail(SkdStatus::Parse, e),
                Err(s) => return s,
            }
        };
        match evaluate(&(*formula).0, &(*trace).0, &preds) {
            Ok(v) => {
                *holds = v;
                SkdStatus::Ok
            }
            Err(e) => fail(SkdStatus::Logic, e),
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn skd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
