//! C ABI over `xmode_qed`.
//!
//! Every fallible call returns an [`XqStatus`]; on failure a message is
//! available from [`xq_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their matching `_free` function.
//! Ports and wings are 0-based; units follow the field names.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

mod circuit;
mod fit;
mod nv;
mod qed;
mod sweep;

pub use circuit::*;
pub use fit::*;
pub use nv::*;
pub use qed::*;
pub use sweep::*;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    SingularInput = 3,
    NoSolution = 4,
    Numerical = 5,
    InsufficientData = 6,
    FitFailure = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

pub(crate) struct Fail {
    status: XqStatus,
    message: String,
}

impl Fail {
    pub(crate) fn new(status: XqStatus, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }
}

impl From<xmode_qed::Error> for Fail {
    fn from(e: xmode_qed::Error) -> Self {
        use xmode_qed::Error as E;
        let status = match &e {
            E::InvalidInput(_) => XqStatus::InvalidInput,
            E::SingularInput(_) => XqStatus::SingularInput,
            E::NoSolution(_) => XqStatus::NoSolution,
            E::Numerical(_) => XqStatus::Numerical,
            E::InsufficientData(_) => XqStatus::InsufficientData,
            E::FitFailure { .. } => XqStatus::FitFailure,
        };
        Fail::new(status, e.to_string())
    }
}

pub(crate) type FfiResult = Result<(), Fail>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, records any failure, and never lets a panic cross the boundary.
pub(crate) fn guard(f: impl FnOnce() -> FfiResult) -> XqStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => XqStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            XqStatus::Panic
        }
    }
}

pub(crate) fn null(what: &str) -> Fail {
    Fail::new(XqStatus::NullPointer, format!("{what} is null"))
}

pub(crate) unsafe fn read<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

pub(crate) unsafe fn write<T>(p: *mut T, what: &str, value: T) -> FfiResult {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

pub(crate) unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

pub(crate) unsafe fn array<const N: usize>(p: *const f64, what: &str) -> Result<[f64; N], Fail> {
    let s = slice(p, N, what)?;
    Ok(std::array::from_fn(|i| s[i]))
}

pub(crate) unsafe fn write_slice(p: *mut f64, len: usize, what: &str, values: &[f64]) -> FfiResult {
    if len < values.len() {
        return Err(Fail::new(
            XqStatus::BufferTooSmall,
            format!("{what} holds {len} values, {} needed", values.len()),
        ));
    }
    if values.is_empty() {
        return Ok(());
    }
    if p.is_null() {
        return Err(null(what));
    }
    std::ptr::copy_nonoverlapping(values.as_ptr(), p, values.len());
    Ok(())
}

pub(crate) fn boxed<T>(out: *mut *mut T, value: T) -> FfiResult {
    if out.is_null() {
        return Err(null("out"));
    }
    unsafe { out.write(Box::into_raw(Box::new(value))) };
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn xq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn xq_status_name(status: XqStatus) -> *const c_char {
    let s: &'static CStr = match status {
        XqStatus::Ok => c"ok",
        XqStatus::NullPointer => c"null pointer",
        XqStatus::InvalidInput => c"invalid input",
        XqStatus::SingularInput => c"singular input",
        XqStatus::NoSolution => c"no solution",
        XqStatus::Numerical => c"numerical error",
        XqStatus::InsufficientData => c"insufficient data",
        XqStatus::FitFailure => c"fit failure",
        XqStatus::BufferTooSmall => c"buffer too small",
        XqStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

#[no_mangle]
pub extern "C" fn xq_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"unknown",
    };
    VERSION.as_ptr()
}
