//! C ABI over recipeforge.
//!
//! Every function returns an [`RfStatus`]. On failure the message is
//! available from [`rf_last_error`] on the same thread until the next call.
//! Strings returned through `char **` out-parameters are owned by the caller
//! and must be released with [`rf_string_free`]; classifiers with
//! [`rf_classifier_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use recipeforge::active::{fleiss_kappa, vote_entropy, Kappa, KappaTable};
use recipeforge::corpus::read_canonical_from;
use recipeforge::entities::{extract_pattern, normalize_entity};
use recipeforge::genre::GENRE_COUNT;
use recipeforge::models::Classifier;
use recipeforge::{Error, Genre};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Validation = 3,
    Parse = 4,
    Io = 5,
    ModelFile = 6,
    DimensionMismatch = 7,
    Diverged = 8,
    Internal = 9,
    Panic = 10,
}

/// Opaque trained classifier.
pub struct RfClassifier {
    inner: Classifier,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RfStatus {
    match e {
        Error::Io { .. } => RfStatus::Io,
        Error::Format(_) | Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => RfStatus::Parse,
        Error::Validation(_) | Error::NotFound(_) | Error::Conflict(_) => RfStatus::Validation,
        Error::DimensionMismatch { .. } => RfStatus::DimensionMismatch,
        Error::NonFiniteLoss { .. } => RfStatus::Diverged,
        Error::ModelFile(_) => RfStatus::ModelFile,
    }
}

struct Fail(RfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RfStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RfStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(RfStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(RfStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<&'static mut T, Fail> {
    // SAFETY: callers pass a valid, writable pointer or null.
    unsafe { p.as_mut() }.ok_or_else(|| Fail(RfStatus::NullArgument, format!("{name} is null")))
}

fn give_string(s: String, out: *mut *mut c_char) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(RfStatus::Internal, "output contains a nul byte".into()))?;
    *out_arg(out, "out")? = c.into_raw();
    Ok(())
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn rf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn rf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn rf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Canonical normalized form of an entity surface.
///
/// # Safety
/// `surface` must be a nul-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_normalize_entity(surface: *const c_char, out: *mut *mut c_char) -> RfStatus {
    guard(|| {
        let s = str_arg(surface, "surface")?;
        give_string(normalize_entity(s), out)
    })
}

/// Pattern-extracted entities of one direction as a JSON array of
/// `{"surface", "normalized", "category"}` objects.
///
/// # Safety
/// `direction` must be a nul-terminated string; `out_json` a writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_extract_entities(direction: *const c_char, out_json: *mut *mut c_char) -> RfStatus {
    guard(|| {
        let d = str_arg(direction, "direction")?;
        let items: Vec<serde_json::Value> = extract_pattern(d)
            .iter()
            .map(|e| {
                serde_json::json!({
                    "surface": e.surface,
                    "normalized": e.normalized,
                    "category": e.category.as_str(),
                })
            })
            .collect();
        give_string(serde_json::Value::Array(items).to_string(), out_json)
    })
}

/// Vote entropy in nats of `n` committee votes given as genre ids 1..9.
///
/// # Safety
/// `genre_ids` must point to `n` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rf_vote_entropy(genre_ids: *const u8, n: usize, out: *mut f64) -> RfStatus {
    guard(|| {
        if genre_ids.is_null() {
            return Err(Fail(RfStatus::NullArgument, "genre_ids is null".into()));
        }
        let votes = std::slice::from_raw_parts(genre_ids, n)
            .iter()
            .map(|&id| Genre::from_id(id))
            .collect::<Result<Vec<_>, _>>()?;
        *out_arg(out, "out")? = vote_entropy(&votes)?;
        Ok(())
    })
}

/// Fleiss' kappa over an `items` x 9 row-major table of rating counts.
/// When every rating falls in one genre kappa is undefined: `*degenerate`
/// is set to 1 and `*out` to NaN.
///
/// # Safety
/// `counts` must point to `items * 9` readable values; `out` and
/// `degenerate` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rf_fleiss_kappa(
    counts: *const u32,
    items: usize,
    out: *mut f64,
    degenerate: *mut i32,
) -> RfStatus {
    guard(|| {
        if counts.is_null() {
            return Err(Fail(RfStatus::NullArgument, "counts is null".into()));
        }
        let flat = std::slice::from_raw_parts(counts, items * GENRE_COUNT);
        let rows = flat
            .chunks(GENRE_COUNT)
            .map(|c| c.try_into().expect("exact chunks"))
            .collect();
        let table = KappaTable::new(rows)?;
        let (value, flag) = match fleiss_kappa(&table) {
            Kappa::Value { kappa, .. } => (kappa, 0),
            Kappa::Degenerate => (f64::NAN, 1),
        };
        *out_arg(out, "out")? = value;
        *out_arg(degenerate, "degenerate")? = flag;
        Ok(())
    })
}

/// Loads a model file written by `recipeforge train`.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_classifier_load(path: *const c_char, out: *mut *mut RfClassifier) -> RfStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        let inner = Classifier::load(Path::new(p))?;
        *out_arg(out, "out")? = Box::into_raw(Box::new(RfClassifier { inner }));
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a classifier from [`rf_classifier_load`], freed once.
#[no_mangle]
pub unsafe extern "C" fn rf_classifier_free(c: *mut RfClassifier) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Scores one record given as a single canonical JSON line. Writes nine
/// genre probabilities (genre id order) to `probs` and the predicted genre
/// id to `genre_id`.
///
/// # Safety
/// `c` must be a live classifier; `record_json` a nul-terminated string;
/// `probs` must have room for 9 doubles; `genre_id` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rf_classifier_predict(
    c: *const RfClassifier,
    record_json: *const c_char,
    probs: *mut f64,
    genre_id: *mut u8,
) -> RfStatus {
    guard(|| {
        let clf = c
            .as_ref()
            .ok_or_else(|| Fail(RfStatus::NullArgument, "classifier is null".into()))?;
        let line = str_arg(record_json, "record_json")?;
        let records = read_canonical_from(line.as_bytes())?;
        let [record] = records.as_slice() else {
            return Err(Fail(
                RfStatus::Validation,
                format!("expected exactly one record, got {}", records.len()),
            ));
        };
        if probs.is_null() {
            return Err(Fail(RfStatus::NullArgument, "probs is null".into()));
        }
        let p = clf.inner.predict_proba(record)?;
        std::slice::from_raw_parts_mut(probs, GENRE_COUNT).copy_from_slice(&p);
        *out_arg(genre_id, "genre_id")? = recipeforge::models::predict_genre(&p)?.id();
        Ok(())
    })
}
