//! C ABI over the girsanov-verdict library.
//!
//! Conventions:
//! - every function returns a [`GvStatus`]; results go through out-pointers;
//! - on failure the message is available from [`gv_last_error`] on the same
//!   thread until the next call;
//! - handles ([`GvExpression`], [`GvField`]) are opaque and released with
//!   their `_free` function; strings returned by the library are released
//!   with [`gv_string_free`];
//! - panics never cross the boundary and surface as [`GvStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use girsanov_verdict::classify1d::{classify, classify_reverse, ClassifyConfig};
use girsanov_verdict::expr::{CoefficientField, Domain, Expression, FieldSpec};
use girsanov_verdict::harness::{canonical_json, load_config, run, Task};
use girsanov_verdict::Tri;

/// Outcome of a library call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidField = 4,
    EvalError = 5,
    ClassifyError = 6,
    RunError = 7,
    Panic = 8,
}

/// Three-valued verdict.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GvTri {
    No = 0,
    Yes = 1,
    Inconclusive = 2,
}

impl From<Tri> for GvTri {
    fn from(t: Tri) -> GvTri {
        match t {
            Tri::Yes => GvTri::Yes,
            Tri::No => GvTri::No,
            Tri::Inconclusive => GvTri::Inconclusive,
        }
    }
}

/// State space of a one-dimensional field.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GvDomain {
    RealLine = 0,
    PositiveHalfLine = 1,
}

/// Local and global verdicts with the six battery conditions in the order
/// plus1, plus2, plus3, minus1, minus2, minus3.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GvAcVerdict {
    pub local_ac: GvTri,
    pub global_ac: GvTri,
    pub beta_zero: GvTri,
    pub battery: [GvTri; 6],
}

/// Opaque parsed expression.
pub struct GvExpression(Expression);

/// Opaque coefficient field.
pub struct GvField(CoefficientField);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Run `body`, converting errors and panics into a status and last error.
fn guarded(body: impl FnOnce() -> Result<(), (GvStatus, String)>) -> GvStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GvStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {message}"));
            GvStatus::Panic
        }
    }
}

fn null() -> (GvStatus, String) {
    (GvStatus::NullPointer, "a required pointer argument is null".to_string())
}

/// # Safety
/// `s` must be null or point to a NUL-terminated string.
unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, (GvStatus, String)> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| (GvStatus::InvalidUtf8, e.to_string()))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn gv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse an expression.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gv_expression_parse(source: *const c_char, out: *mut *mut GvExpression) -> GvStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null());
        }
        let e = Expression::parse(text(source)?).map_err(|e| (GvStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(GvExpression(e)));
        Ok(())
    })
}

/// Evaluate at `point[0..len]` and time `t`.
///
/// # Safety
/// `expr` must come from [`gv_expression_parse`]; `point` must hold `len`
/// values (it may be null when `len` is 0); `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gv_expression_eval(
    expr: *const GvExpression,
    point: *const f64,
    len: usize,
    t: f64,
    out: *mut f64,
) -> GvStatus {
    guarded(|| {
        if expr.is_null() || out.is_null() || (point.is_null() && len > 0) {
            return Err(null());
        }
        let p: &[f64] = if len == 0 { &[] } else { std::slice::from_raw_parts(point, len) };
        *out = (*expr).0.eval(p, t).map_err(|e| (GvStatus::EvalError, e.to_string()))?;
        Ok(())
    })
}

/// Release an expression; null is ignored.
///
/// # Safety
/// `expr` must be null or come from [`gv_expression_parse`], and not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gv_expression_free(expr: *mut GvExpression) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// Build a one-dimensional field from expression texts in `x`.
///
/// # Safety
/// The strings must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gv_field_new_1d(
    domain: GvDomain,
    b: *const c_char,
    c: *const c_char,
    beta: *const c_char,
    x0: f64,
    out: *mut *mut GvField,
) -> GvStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null());
        }
        let domain = match domain {
            GvDomain::RealLine => Domain::RealLine,
            GvDomain::PositiveHalfLine => Domain::PositiveHalfLine,
        };
        let f = CoefficientField::one_dimensional(domain, text(b)?, text(c)?, text(beta)?, x0)
            .map_err(|e| (GvStatus::InvalidField, e.to_string()))?;
        *out = Box::into_raw(Box::new(GvField(f)));
        Ok(())
    })
}

/// Build a field of any dimension from its JSON description (the `field`
/// object of a run configuration).
///
/// # Safety
/// `json` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gv_field_from_json(json: *const c_char, out: *mut *mut GvField) -> GvStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null());
        }
        let spec: FieldSpec = serde_json::from_str(text(json)?).map_err(|e| (GvStatus::ParseError, e.to_string()))?;
        let f = CoefficientField::from_spec(&spec).map_err(|e| (GvStatus::InvalidField, e.to_string()))?;
        *out = Box::into_raw(Box::new(GvField(f)));
        Ok(())
    })
}

/// Release a field; null is ignored.
///
/// # Safety
/// `field` must be null or come from a `gv_field_*` constructor, and not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gv_field_free(field: *mut GvField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Classify a one-dimensional field with default settings.
///
/// # Safety
/// `field` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gv_classify_1d(field: *const GvField, out: *mut GvAcVerdict) -> GvStatus {
    guarded(|| {
        if field.is_null() || out.is_null() {
            return Err(null());
        }
        let v = classify(&(*field).0, &ClassifyConfig::default()).map_err(|e| (GvStatus::ClassifyError, e.to_string()))?;
        let battery = v.battery.rows().map(|(_, _, c)| GvTri::from(c.holds));
        *out = GvAcVerdict {
            local_ac: v.local_ac.into(),
            global_ac: v.global_ac.into(),
            beta_zero: v.beta_zero.into(),
            battery,
        };
        Ok(())
    })
}

/// Local verdict with the roles of the two laws exchanged.
///
/// # Safety
/// `field` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gv_classify_reverse(field: *const GvField, out: *mut GvTri) -> GvStatus {
    guarded(|| {
        if field.is_null() || out.is_null() {
            return Err(null());
        }
        let v = classify_reverse(&(*field).0, &ClassifyConfig::default()).map_err(|e| (GvStatus::ClassifyError, e.to_string()))?;
        *out = v.verdict.into();
        Ok(())
    })
}

/// Run a task from a JSON configuration and return the canonical JSON
/// report. `task` may be null when the configuration names the task.
/// `exit_code` receives 0 (pass), 2 (inconclusive) or 1 (fail).
///
/// # Safety
/// `config` must be NUL-terminated, `task` null or NUL-terminated, and the
/// out-pointers valid. The report must be released with [`gv_string_free`].
#[no_mangle]
pub unsafe extern "C" fn gv_run_json(
    config: *const c_char,
    task: *const c_char,
    report: *mut *mut c_char,
    exit_code: *mut i32,
) -> GvStatus {
    guarded(|| {
        if report.is_null() || exit_code.is_null() {
            return Err(null());
        }
        let cfg = load_config(text(config)?).map_err(|e| (GvStatus::ParseError, e.to_string()))?;
        let task = if task.is_null() {
            None
        } else {
            Some(text(task)?.parse::<Task>().map_err(|e| (GvStatus::ParseError, e))?)
        };
        let r = run(&cfg, task).map_err(|e| (GvStatus::RunError, e.to_string()))?;
        *exit_code = r.exit_code;
        *report = into_c_string(canonical_json(&r));
        Ok(())
    })
}

/// Release a string returned by the library; null is ignored.
///
/// # Safety
/// `s` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
