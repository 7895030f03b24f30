//! C ABI over the transtech library.
//!
//! Every fallible call returns a [`TtStatus`]; on failure the message is
//! kept per thread and read with [`tt_last_error`]. Handles are opaque and
//! must be released with their `_free` function. Strings returned through
//! out-pointers belong to the caller and are released with [`tt_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use transtech::align::{cosine, EmbeddingTable};
use transtech::annotate::{classify_pair, RuleResources};
use transtech::corpus::from_json_line;
use transtech::encode::Featurizer;
use transtech::eval::f1;
use transtech::model::{load_checkpoint, multitask_loss, predict, Architecture, ArchitectureSpec, TrainedModel};
use transtech::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Resource = 5,
    Unlabelable = 6,
    Checkpoint = 7,
    Model = 8,
    Panic = 99,
}

impl From<&Error> for TtStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } => TtStatus::Io,
            Error::Schema { .. } | Error::InvalidRecord { .. } | Error::Malformed { .. } => TtStatus::Parse,
            Error::Resource { .. } => TtStatus::Resource,
            Error::Unlabelable { .. } => TtStatus::Unlabelable,
            Error::Checkpoint(_) => TtStatus::Checkpoint,
            Error::UnknownLabel { .. } | Error::FormatMismatch { .. } | Error::DimensionMismatch { .. } => {
                TtStatus::Model
            }
            _ => TtStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(TtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TtStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TtStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(TtStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(TtStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn owned(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(TtStatus::InvalidArgument, "string contains NUL".into()))
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn tt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version; static, do not free.
#[no_mangle]
pub extern "C" fn tt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Rule resources loaded from a directory.
pub struct TtResources(RuleResources);

/// # Safety
/// `dir` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tt_resources_load(dir: *const c_char, out: *mut *mut TtResources) -> TtStatus {
    guard(|| {
        let dir = text(dir, "dir")?;
        let res = RuleResources::load_dir(&PathBuf::from(dir))?;
        put(out, Box::into_raw(Box::new(TtResources(res))))
    })
}

/// # Safety
/// `res` must come from [`tt_resources_load`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tt_resources_free(res: *mut TtResources) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Rule-based technique label of one JSON record, e.g. `"TRA"`.
///
/// # Safety
/// Pointers must be valid; `record_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tt_classify(
    res: *const TtResources,
    record_json: *const c_char,
    out_label: *mut *mut c_char,
) -> TtStatus {
    guard(|| {
        let res = res.as_ref().ok_or_else(|| null("resources"))?;
        let record = from_json_line(text(record_json, "record")?)?;
        let (label, _) = classify_pair(&record, &res.0)?;
        put(out_label, owned(label.to_string())?)
    })
}

/// A trained single-head model with the resources its features need.
pub struct TtModel {
    model: TrainedModel,
    resources: RuleResources,
    embeddings: Option<EmbeddingTable>,
}

/// Loads a checkpoint. `embeddings` may be null unless the model was
/// trained with embedding features.
///
/// # Safety
/// Strings must be NUL-terminated; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tt_model_load(
    checkpoint: *const c_char,
    resources_dir: *const c_char,
    embeddings: *const c_char,
    out: *mut *mut TtModel,
) -> TtStatus {
    guard(|| {
        let model = load_checkpoint(&PathBuf::from(text(checkpoint, "checkpoint")?))?;
        let resources = RuleResources::load_dir(&PathBuf::from(text(resources_dir, "resources_dir")?))?;
        let embeddings = if embeddings.is_null() {
            None
        } else {
            Some(EmbeddingTable::load(&PathBuf::from(text(embeddings, "embeddings")?))?)
        };
        if model.feature_config.use_embeddings && embeddings.is_none() {
            return Err(Failure(TtStatus::InvalidArgument, "model needs embeddings".into()));
        }
        put(out, Box::into_raw(Box::new(TtModel { model, resources, embeddings })))
    })
}

/// # Safety
/// `model` must come from [`tt_model_load`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tt_model_free(model: *mut TtModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Predicted label of the model's first head and its probability.
///
/// # Safety
/// Pointers must be valid; `record_json` NUL-terminated. `out_probability`
/// may be null.
#[no_mangle]
pub unsafe extern "C" fn tt_model_predict(
    model: *const TtModel,
    record_json: *const c_char,
    out_label: *mut *mut c_char,
    out_probability: *mut f64,
) -> TtStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let record = from_json_line(text(record_json, "record")?)?;
        let mut featurizer = Featurizer::new(&m.resources, m.model.feature_config);
        if let Some(e) = &m.embeddings {
            featurizer = featurizer.with_embeddings(e);
        }
        let p = predict(&m.model, &record, &featurizer)?;
        if !out_probability.is_null() {
            out_probability.write(p.probabilities[p.index]);
        }
        put(out_label, owned(p.label)?)
    })
}

/// F1 from raw counts; 0 when undefined.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tt_f1(tp: u64, fp: u64, fn_: u64, out: *mut f64) -> TtStatus {
    guard(|| put(out, f1(tp, fp, fn_)))
}

/// Cosine similarity of two vectors of length `len`.
///
/// # Safety
/// `u` and `v` must point to `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tt_cosine(u: *const f64, v: *const f64, len: usize, out: *mut f64) -> TtStatus {
    guard(|| {
        if u.is_null() || v.is_null() {
            return Err(null("vector"));
        }
        let (u, v) = (std::slice::from_raw_parts(u, len), std::slice::from_raw_parts(v, len));
        put(out, cosine(u, v)?)
    })
}

/// `alpha * l1 + beta * l2`; `alpha` must be positive, `beta` non-negative,
/// and the two must sum to 1.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tt_multitask_loss(l1: f64, l2: f64, alpha: f64, beta: f64, out: *mut f64) -> TtStatus {
    guard(|| {
        ArchitectureSpec::with_loss_weights(Architecture::A2, alpha, beta)?;
        put(out, multitask_loss(l1, l2, alpha, beta)?)
    })
}
