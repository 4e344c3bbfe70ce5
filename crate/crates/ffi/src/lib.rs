//! C interface to the wordclosure checker.
//!
//! Every fallible call returns a [`WcStatus`]. On failure the message is
//! available from [`wc_last_error_message`] on the same thread. Strings
//! returned through out-pointers are owned by the caller and released with
//! [`wc_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use wordclosure::io::parse_pair_line;
use wordclosure::metrics::Prf;
use wordclosure::model::{TestCasePair, Verdict};
use wordclosure::pipeline::{Checker, ResourceFiles};
use wordclosure::similarity::{ConfigKind, LangPair, Thresholds};
use wordclosure::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed pair record or bracket tree.
    Parse = 3,
    /// Bad configuration, missing resource or invalid pair.
    Config = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WcSide {
    Source = 0,
    Followup = 1,
}

/// Precision, recall and F1 in [0, 1]. An undefined ratio (zero
/// denominator) reads 0 and sets the matching flag.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WcPrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

/// Opaque checker handle.
pub struct WcChecker {
    inner: Checker,
}

/// Opaque verdict handle.
pub struct WcVerdict {
    inner: Verdict,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(WcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => WcStatus::Io,
            Error::Bracket { .. } | Error::Format { .. } | Error::Json(_) => WcStatus::Parse,
            _ => WcStatus::Config,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            WcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            WcStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(WcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn required_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(WcStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn optional_path(p: *const c_char, what: &str) -> Result<Option<PathBuf>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        required_str(p, what).map(|s| Some(PathBuf::from(s)))
    }
}

unsafe fn parse_lang(p: *const c_char) -> Result<LangPair, Failure> {
    if p.is_null() {
        return Ok(LangPair::EnZh);
    }
    required_str(p, "lang")?.parse().map_err(Failure::from)
}

fn parse_pair(line: &str, lang: LangPair) -> Result<TestCasePair, Failure> {
    parse_pair_line(line, lang).map_err(|m| Failure(WcStatus::Parse, m))
}

fn out_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|e| Failure(WcStatus::Parse, e.to_string()))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Builds a checker. `config` is 1 to 5. `lang` is "en-zh" or "zh-en" and
/// defaults to en-zh when null. Resource paths may be null. A NaN
/// `threshold` keeps the per-transformation defaults for the language.
///
/// String arguments must be null or NUL-terminated. `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wc_checker_new(
    config: u8,
    lang: *const c_char,
    synonyms_path: *const c_char,
    vectors_path: *const c_char,
    stopwords_path: *const c_char,
    threshold: f64,
    out: *mut *mut WcChecker,
) -> WcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let lang = parse_lang(lang)?;
        let kind = ConfigKind::from_number(config)?;
        let files = ResourceFiles {
            synonyms: optional_path(synonyms_path, "synonyms_path")?,
            vectors: optional_path(vectors_path, "vectors_path")?,
            stopwords: optional_path(stopwords_path, "stopwords_path")?,
        };
        let thresholds = if threshold.is_nan() {
            Thresholds::defaults(lang)
        } else {
            Thresholds::uniform(threshold)
        };
        let (inner, _warnings) = Checker::from_files(kind, &files, thresholds, lang)?;
        *out = Box::into_raw(Box::new(WcChecker { inner }));
        Ok(())
    })
}

/// `checker` must come from [`wc_checker_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn wc_checker_free(checker: *mut WcChecker) {
    if !checker.is_null() {
        drop(Box::from_raw(checker));
    }
}

unsafe fn run_check(checker: *const WcChecker, pair_json: *const c_char) -> Result<Verdict, Failure> {
    let checker = checker.as_ref().ok_or_else(|| null("checker"))?;
    let line = required_str(pair_json, "pair_json")?;
    let pair = parse_pair(line, checker.inner.lang)?;
    Ok(checker.inner.check(&pair)?)
}

/// Checks one pair record and writes the verdict as JSON.
///
/// `checker` must be live, `pair_json` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wc_check_pair_json(
    checker: *const WcChecker,
    pair_json: *const c_char,
    out: *mut *mut c_char,
) -> WcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let v = run_check(checker, pair_json)?;
        out_string(out, serde_json::to_string(&v).map_err(Error::from)?)
    })
}

/// Checks one pair record and returns a verdict handle.
///
/// `checker` must be live, `pair_json` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wc_check_pair(
    checker: *const WcChecker,
    pair_json: *const c_char,
    out: *mut *mut WcVerdict,
) -> WcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let inner = run_check(checker, pair_json)?;
        *out = Box::into_raw(Box::new(WcVerdict { inner }));
        Ok(())
    })
}

/// `verdict` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn wc_verdict_is_violation(verdict: *const WcVerdict) -> bool {
    verdict.as_ref().is_some_and(|v| v.inner.violation)
}

/// `verdict` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn wc_verdict_failure_count(verdict: *const WcVerdict) -> usize {
    verdict.as_ref().map_or(0, |v| v.inner.failures.len())
}

/// Copies up to `cap` flagged token indices of one translation into `buf`
/// in ascending order and returns the total count. Pass a null `buf` to
/// query the count.
///
/// `verdict` must be null or live. `buf` must be null or hold `cap` slots.
#[no_mangle]
pub unsafe extern "C" fn wc_verdict_flagged(
    verdict: *const WcVerdict,
    side: WcSide,
    buf: *mut usize,
    cap: usize,
) -> usize {
    let Some(v) = verdict.as_ref() else { return 0 };
    let set = match side {
        WcSide::Source => &v.inner.fine_grained.source,
        WcSide::Followup => &v.inner.fine_grained.followup,
    };
    if !buf.is_null() {
        for (k, &i) in set.iter().take(cap).enumerate() {
            *buf.add(k) = i;
        }
    }
    set.len()
}

/// `verdict` must come from [`wc_check_pair`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn wc_verdict_free(verdict: *mut WcVerdict) {
    if !verdict.is_null() {
        drop(Box::from_raw(verdict));
    }
}

/// Refines one pair record and writes its word closures as a JSON array.
/// No similarity resources are needed.
///
/// `pair_json` must be NUL-terminated, `lang` null or NUL-terminated and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wc_closures_json(
    pair_json: *const c_char,
    lang: *const c_char,
    out: *mut *mut c_char,
) -> WcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let lang = parse_lang(lang)?;
        let pair = parse_pair(required_str(pair_json, "pair_json")?, lang)?;
        let prepared = wordclosure::comparator::prepare(&pair, &Default::default())?;
        out_string(out, serde_json::to_string(&prepared.closures).map_err(Error::from)?)
    })
}

/// Precision, recall and F1 from raw counts.
#[no_mangle]
pub extern "C" fn wc_prf(tp: u64, fp: u64, fn_: u64) -> WcPrf {
    let p = Prf::from_counts(tp, fp, fn_);
    WcPrf {
        precision: p.precision.value,
        recall: p.recall.value,
        f1: p.f1.value,
        precision_undefined: p.precision.undefined,
        recall_undefined: p.recall.undefined,
        f1_undefined: p.f1.undefined,
    }
}

/// Message of the last failed call on this thread, empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn wc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn wc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn wc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(wc_last_error_message()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn prf_marks_undefined_ratios() {
        let p = wc_prf(0, 0, 0);
        assert!(p.precision_undefined && p.recall_undefined && p.f1_undefined);
        let p = wc_prf(104, 19, 18);
        assert!((p.f1 - 208.0 / 245.0).abs() < 1e-12);
        assert!(!p.f1_undefined);
    }

    #[test]
    fn null_out_pointer_is_reported() {
        let s = unsafe { wc_checker_new(3, ptr::null(), ptr::null(), ptr::null(), ptr::null(), f64::NAN, ptr::null_mut()) };
        assert_eq!(s, WcStatus::NullPointer);
        assert!(last_error().contains("out"));
    }

    #[test]
    fn config_errors_map_to_config_status() {
        let mut h = ptr::null_mut();
        let s = unsafe { wc_checker_new(2, ptr::null(), ptr::null(), ptr::null(), ptr::null(), f64::NAN, &mut h) };
        assert_eq!(s, WcStatus::Config);
        assert!(h.is_null());
        let s = unsafe { wc_checker_new(7, ptr::null(), ptr::null(), ptr::null(), ptr::null(), f64::NAN, &mut h) };
        assert_eq!(s, WcStatus::Config);
    }

    #[test]
    fn invalid_utf8_is_rejected() {
        let bad = [0xffu8, 0xfe, 0];
        let mut h = ptr::null_mut();
        let s = unsafe { wc_checker_new(3, bad.as_ptr().cast(), ptr::null(), ptr::null(), ptr::null(), f64::NAN, &mut h) };
        assert_eq!(s, WcStatus::InvalidUtf8);
    }

    #[test]
    fn success_clears_the_error() {
        let mut h = ptr::null_mut();
        unsafe { wc_checker_new(9, ptr::null(), ptr::null(), ptr::null(), ptr::null(), f64::NAN, &mut h) };
        assert!(!last_error().is_empty());
        let s = unsafe { wc_checker_new(3, ptr::null(), ptr::null(), ptr::null(), ptr::null(), 0.5, &mut h) };
        assert_eq!(s, WcStatus::Ok);
        assert!(last_error().is_empty());
        unsafe { wc_checker_free(h) };
    }

    #[test]
    fn version_is_the_package_version() {
        let v = unsafe { CStr::from_ptr(wc_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
