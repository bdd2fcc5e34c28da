//! C ABI for the contdiag library.
//!
//! Handles are opaque pointers created and freed by this API; every
//! fallible call returns a [`ContdiagStatus`], and the message of the most
//! recent failure on the current thread is available through
//! `contdiag_last_error_message`. The numeric status values match the CLI
//! exit codes.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use contdiag::pipeline::{diagonalize_c1, diagonalize_distinct, PipelineOptions, UnitaryTrack};
use contdiag::report::exit_code_for;
use contdiag::scalar::{Grid, HermitianField, Interval, MatrixField};
use contdiag::spectral::eigenvalues_at;

/// Status codes; nonzero values match the `contdiag` CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContdiagStatus {
    Ok = 0,
    InternalError = 1,
    InvalidArgument = 2,
    GapTooSmall = 3,
    ObstructionDetected = 4,
    DerivativeDiscontinuous = 5,
    NotFinitelyMany = 6,
}

/// Diagonalization mode selector for `contdiag_diagonalize`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContdiagMode {
    /// Eigenvalues distinct on the whole interval.
    Distinct = 0,
    /// C^1 field, finitely many coalescence points.
    C1 = 1,
}

/// Residual summary of a computed track.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ContdiagMetrics {
    pub max_unitarity_defect: f64,
    pub max_offdiag_resid: f64,
    pub max_step_jump: f64,
    pub min_gap: f64,
}

/// Opaque field handle.
pub struct ContdiagField {
    inner: HermitianField,
}

/// Opaque solution handle.
pub struct ContdiagTrack {
    inner: UnitaryTrack,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(cleaned).unwrap_or_default());
}

fn fail(status: ContdiagStatus, msg: &str) -> ContdiagStatus {
    set_error(msg);
    status
}

fn guard<F: FnOnce() -> ContdiagStatus>(body: F) -> ContdiagStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(ContdiagStatus::InternalError, "internal panic"),
    }
}

unsafe fn cstr<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, String> {
    if ptr.is_null() {
        return Err(format!("{} is null", name));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| format!("{} is not valid UTF-8", name))
}

/// Build a field from four expression strings on `[a, b]`.
/// On success writes a new handle to `out`; free it with
/// `contdiag_field_free`.
///
/// # Safety
/// The expression pointers must be NUL-terminated strings and `out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn contdiag_field_new(
    f: *const c_char,
    g: *const c_char,
    h_re: *const c_char,
    h_im: *const c_char,
    a: f64,
    b: f64,
    out: *mut *mut ContdiagField,
) -> ContdiagStatus {
    guard(|| {
        if out.is_null() {
            return fail(ContdiagStatus::InvalidArgument, "out is null");
        }
        let parts = (|| -> Result<[&str; 4], String> {
            Ok([
                cstr(f, "f")?,
                cstr(g, "g")?,
                cstr(h_re, "h_re")?,
                cstr(h_im, "h_im")?,
            ])
        })();
        let [f, g, h_re, h_im] = match parts {
            Ok(p) => p,
            Err(e) => return fail(ContdiagStatus::InvalidArgument, &e),
        };
        let interval = match Interval::new(a, b) {
            Ok(iv) => iv,
            Err(e) => return fail(ContdiagStatus::InvalidArgument, &e.to_string()),
        };
        match HermitianField::from_exprs(f, g, h_re, h_im, interval) {
            Ok(field) => {
                *out = Box::into_raw(Box::new(ContdiagField { inner: field }));
                ContdiagStatus::Ok
            }
            Err(e) => fail(ContdiagStatus::InvalidArgument, &e.to_string()),
        }
    })
}

/// # Safety
/// `field` must come from `contdiag_field_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn contdiag_field_free(field: *mut ContdiagField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Evaluate the field entries at `t`: writes `[f, g, h_re, h_im]`.
///
/// # Safety
/// `field` must be a live handle; `out` must point to 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn contdiag_field_eval(
    field: *const ContdiagField,
    t: f64,
    out: *mut f64,
) -> ContdiagStatus {
    guard(|| {
        if field.is_null() || out.is_null() {
            return fail(ContdiagStatus::InvalidArgument, "null pointer");
        }
        match (*field).inner.at(t) {
            Ok(m) => {
                let values = [m.f, m.g, m.h.re, m.h.im];
                ptr::copy_nonoverlapping(values.as_ptr(), out, 4);
                ContdiagStatus::Ok
            }
            Err(e) => fail(ContdiagStatus::InvalidArgument, &e.to_string()),
        }
    })
}

/// Closed-form eigenvalues of the field at `t`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn contdiag_eigenvalues_at(
    field: *const ContdiagField,
    t: f64,
    plus: *mut f64,
    minus: *mut f64,
) -> ContdiagStatus {
    guard(|| {
        if field.is_null() || plus.is_null() || minus.is_null() {
            return fail(ContdiagStatus::InvalidArgument, "null pointer");
        }
        match eigenvalues_at(&(*field).inner, t) {
            Ok(e) => {
                *plus = e.plus;
                *minus = e.minus;
                ContdiagStatus::Ok
            }
            Err(e) => fail(ContdiagStatus::InvalidArgument, &e.to_string()),
        }
    })
}

/// Run a diagonalization on an `n`-point uniform grid and hand back a
/// track. Free with `contdiag_track_free`.
///
/// # Safety
/// `field` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn contdiag_diagonalize(
    field: *const ContdiagField,
    n: usize,
    mode: ContdiagMode,
    out: *mut *mut ContdiagTrack,
) -> ContdiagStatus {
    guard(|| {
        if field.is_null() || out.is_null() {
            return fail(ContdiagStatus::InvalidArgument, "null pointer");
        }
        let inner = &(*field).inner;
        let iv = inner.interval();
        let grid = match Grid::new(iv.a, iv.b, n) {
            Ok(g) => g,
            Err(e) => return fail(ContdiagStatus::InvalidArgument, &e.to_string()),
        };
        let opts = PipelineOptions::default();
        let result = match mode {
            ContdiagMode::Distinct => diagonalize_distinct(inner, &grid, &opts),
            ContdiagMode::C1 => diagonalize_c1(inner, &grid, &opts).map(|o| o.unitary),
        };
        match result {
            Ok(track) => {
                *out = Box::into_raw(Box::new(ContdiagTrack { inner: track }));
                ContdiagStatus::Ok
            }
            Err(e) => {
                let status = match exit_code_for(&e) {
                    3 => ContdiagStatus::GapTooSmall,
                    4 => ContdiagStatus::ObstructionDetected,
                    5 => ContdiagStatus::DerivativeDiscontinuous,
                    6 => ContdiagStatus::NotFinitelyMany,
                    2 => ContdiagStatus::InvalidArgument,
                    _ => ContdiagStatus::InternalError,
                };
                fail(status, &e.to_string())
            }
        }
    })
}

/// Number of grid nodes in the track.
///
/// # Safety
/// `track` must be a live handle (null returns 0).
#[no_mangle]
pub unsafe extern "C" fn contdiag_track_len(track: *const ContdiagTrack) -> usize {
    if track.is_null() {
        return 0;
    }
    (*track).inner.grid.len()
}

/// Copy row `i` into `out` as 13 doubles:
/// `t, ReU11, ImU11, ReU12, ImU12, ReU21, ImU21, ReU22, ImU22, d1, d2,
/// offdiag_resid, unitarity_defect` (the CSV column layout).
///
/// # Safety
/// `track` must be a live handle; `out` must point to 13 doubles.
#[no_mangle]
pub unsafe extern "C" fn contdiag_track_row(
    track: *const ContdiagTrack,
    i: usize,
    out: *mut f64,
) -> ContdiagStatus {
    guard(|| {
        if track.is_null() || out.is_null() {
            return fail(ContdiagStatus::InvalidArgument, "null pointer");
        }
        let tr = &(*track).inner;
        if i >= tr.grid.len() {
            return fail(ContdiagStatus::InvalidArgument, "row index out of range");
        }
        let u = &tr.mats[i];
        let (d1, d2) = tr.diag[i];
        let row = [
            tr.grid.point(i),
            u.0[0][0].re,
            u.0[0][0].im,
            u.0[0][1].re,
            u.0[0][1].im,
            u.0[1][0].re,
            u.0[1][0].im,
            u.0[1][1].re,
            u.0[1][1].im,
            d1,
            d2,
            tr.offdiag_resid[i],
            tr.unitarity_defect[i],
        ];
        ptr::copy_nonoverlapping(row.as_ptr(), out, row.len());
        ContdiagStatus::Ok
    })
}

/// Residual summary of the track.
///
/// # Safety
/// `track` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn contdiag_track_metrics(
    track: *const ContdiagTrack,
    out: *mut ContdiagMetrics,
) -> ContdiagStatus {
    guard(|| {
        if track.is_null() || out.is_null() {
            return fail(ContdiagStatus::InvalidArgument, "null pointer");
        }
        let m = &(*track).inner.metrics;
        *out = ContdiagMetrics {
            max_unitarity_defect: m.max_unitarity_defect,
            max_offdiag_resid: m.max_offdiag_resid,
            max_step_jump: m.max_step_jump,
            min_gap: m.min_gap,
        };
        ContdiagStatus::Ok
    })
}

/// # Safety
/// `track` must come from `contdiag_diagonalize` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn contdiag_track_free(track: *mut ContdiagTrack) {
    if !track.is_null() {
        drop(Box::from_raw(track));
    }
}

/// Copy the most recent error message on this thread into `buf`
/// (truncated, always NUL-terminated when `cap > 0`). Returns the full
/// message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must point to at least `cap` writable bytes, or be null.
#[no_mangle]
pub unsafe extern "C" fn contdiag_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Static version string, NUL-terminated.
#[no_mangle]
pub extern "C" fn contdiag_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
