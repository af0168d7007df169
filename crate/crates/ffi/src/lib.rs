//! C ABI for the fogcast model, scaler, solar geometry and ROC AUC.
//!
//! Models and scalers are opaque handles created by `*_load` functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`FogStatus`]; on failure, [`fog_last_error_message`] describes the
//! problem until the next failing call on the same thread. Feature vectors
//! are `double[19]` in the order reported by [`fog_feature_name`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::OnceLock;

use chrono::DateTime;
use fogcast::explain::{ExplainError, TreeExplainer};
use fogcast::features::{FeatureError, ScalerStats, FEATURE_NAMES, NUM_FEATURES};
use fogcast::gbdt::{GbdtError, GbdtModel};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FogStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    CorruptFile = 4,
    VersionMismatch = 5,
    SchemaMismatch = 6,
    MissingValue = 7,
    /// Metric undefined for the input, e.g. ROC AUC with one class.
    Undefined = 8,
    /// A panic was caught at the boundary.
    Internal = 9,
}

/// Opaque trained ensemble.
pub struct FogModel {
    model: GbdtModel,
}

/// Opaque standardization statistics.
pub struct FogScaler {
    stats: ScalerStats,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("interior NULs removed"));
}

fn fail(status: FogStatus, msg: impl Into<String>) -> FogStatus {
    set_error(msg);
    status
}

fn model_status(e: &GbdtError) -> FogStatus {
    match e {
        GbdtError::Io(_) => FogStatus::Io,
        GbdtError::CorruptModelFile(_) => FogStatus::CorruptFile,
        GbdtError::VersionMismatch { .. } => FogStatus::VersionMismatch,
        GbdtError::SchemaMismatch(_) => FogStatus::SchemaMismatch,
        GbdtError::MissingValue(_) => FogStatus::MissingValue,
        _ => FogStatus::InvalidArgument,
    }
}

fn from_model_error(e: GbdtError) -> FogStatus {
    fail(model_status(&e), e.to_string())
}

fn from_feature_error(e: FeatureError) -> FogStatus {
    let status = match e {
        FeatureError::Io(_) => FogStatus::Io,
        FeatureError::Json(_) | FeatureError::Malformed(_) => FogStatus::CorruptFile,
        FeatureError::SchemaMismatch(_) => FogStatus::SchemaMismatch,
        _ => FogStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn from_explain_error(e: ExplainError) -> FogStatus {
    match e {
        ExplainError::Model(m) => from_model_error(m),
        ExplainError::SchemaMismatch(_) => fail(FogStatus::SchemaMismatch, e.to_string()),
        ExplainError::ZeroCoverNode { .. } => fail(FogStatus::CorruptFile, e.to_string()),
        other => fail(FogStatus::InvalidArgument, other.to_string()),
    }
}

/// Runs `f`, turning a panic into [`FogStatus::Internal`].
fn guard(f: impl FnOnce() -> FogStatus) -> FogStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(FogStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, FogStatus> {
    if path.is_null() {
        return Err(fail(FogStatus::NullPointer, "path is NULL"));
    }
    match CStr::from_ptr(path).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => Err(fail(FogStatus::InvalidArgument, "path is not valid UTF-8")),
    }
}

unsafe fn feature_arg<'a>(x: *const f64, n_features: usize) -> Result<&'a [f64], FogStatus> {
    if x.is_null() {
        return Err(fail(FogStatus::NullPointer, "feature vector is NULL"));
    }
    if n_features != NUM_FEATURES {
        return Err(fail(
            FogStatus::SchemaMismatch,
            format!("expected {NUM_FEATURES} features, got {n_features}"),
        ));
    }
    Ok(std::slice::from_raw_parts(x, n_features))
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fog_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn fog_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION.get_or_init(|| CString::new(env!("CARGO_PKG_VERSION")).expect("no NUL")).as_ptr()
}

/// Number of model input features (19).
#[no_mangle]
pub extern "C" fn fog_num_features() -> usize {
    NUM_FEATURES
}

/// Static name of feature `index`, or NULL when out of range.
#[no_mangle]
pub extern "C" fn fog_feature_name(index: usize) -> *const c_char {
    static NAMES: OnceLock<Vec<CString>> = OnceLock::new();
    let names = NAMES.get_or_init(|| FEATURE_NAMES.iter().map(|n| CString::new(*n).expect("no NUL")).collect());
    names.get(index).map_or(std::ptr::null(), |n| n.as_ptr())
}

/// Loads a model file written by the trainer.
///
/// # Safety
///
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fog_model_load(path: *const c_char, out: *mut *mut FogModel) -> FogStatus {
    guard(|| {
        if out.is_null() {
            return fail(FogStatus::NullPointer, "out is NULL");
        }
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match GbdtModel::load(&path) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(FogModel { model }));
                FogStatus::Ok
            }
            Err(e) => from_model_error(e),
        }
    })
}

/// Loads a model from an in-memory copy of its file.
///
/// # Safety
///
/// `bytes` must point to `len` readable bytes and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fog_model_from_json(bytes: *const u8, len: usize, out: *mut *mut FogModel) -> FogStatus {
    guard(|| {
        if bytes.is_null() || out.is_null() {
            return fail(FogStatus::NullPointer, "bytes or out is NULL");
        }
        match GbdtModel::from_json(std::slice::from_raw_parts(bytes, len)) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(FogModel { model }));
                FogStatus::Ok
            }
            Err(e) => from_model_error(e),
        }
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
///
/// `model` must come from a load function and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fog_model_free(model: *mut FogModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of trees in the ensemble, 0 for NULL.
///
/// # Safety
///
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fog_model_num_trees(model: *const FogModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.trees().len())
}

unsafe fn predict_with(
    model: *const FogModel,
    x: *const f64,
    n_features: usize,
    out: *mut f64,
    f: fn(&GbdtModel, &[f64]) -> Result<f64, GbdtError>,
) -> FogStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(FogStatus::NullPointer, "model is NULL");
        };
        if out.is_null() {
            return fail(FogStatus::NullPointer, "out is NULL");
        }
        let x = match feature_arg(x, n_features) {
            Ok(x) => x,
            Err(s) => return s,
        };
        match f(&m.model, x) {
            Ok(v) => {
                *out = v;
                FogStatus::Ok
            }
            Err(e) => from_model_error(e),
        }
    })
}

/// Fog probability for one scaled feature vector.
///
/// # Safety
///
/// `model` must be a live handle, `x` point to `n_features` doubles and
/// `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn fog_model_predict_proba(
    model: *const FogModel,
    x: *const f64,
    n_features: usize,
    out: *mut f64,
) -> FogStatus {
    predict_with(model, x, n_features, out, GbdtModel::predict_proba)
}

/// Log-odds margin for one scaled feature vector.
///
/// # Safety
///
/// As [`fog_model_predict_proba`].
#[no_mangle]
pub unsafe extern "C" fn fog_model_predict_margin(
    model: *const FogModel,
    x: *const f64,
    n_features: usize,
    out: *mut f64,
) -> FogStatus {
    predict_with(model, x, n_features, out, GbdtModel::predict_margin)
}

/// SHAP values of `n_rows` scaled rows (row-major, 19 columns) in margin
/// space. Writes 19 values per row to `out_values`, and optionally the
/// shared base value to `out_base` and per-row margins to `out_margins`.
///
/// # Safety
///
/// `x` must hold `n_rows * 19` doubles and `out_values` as many writable
/// doubles; `out_margins`, if not NULL, `n_rows` doubles.
#[no_mangle]
pub unsafe extern "C" fn fog_model_shap(
    model: *const FogModel,
    x: *const f64,
    n_rows: usize,
    out_values: *mut f64,
    out_base: *mut f64,
    out_margins: *mut f64,
) -> FogStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(FogStatus::NullPointer, "model is NULL");
        };
        if x.is_null() || out_values.is_null() {
            return fail(FogStatus::NullPointer, "x or out_values is NULL");
        }
        let explainer = match TreeExplainer::new(&m.model) {
            Ok(e) => e,
            Err(e) => return from_explain_error(e),
        };
        let rows = std::slice::from_raw_parts(x, n_rows * NUM_FEATURES);
        let values = std::slice::from_raw_parts_mut(out_values, n_rows * NUM_FEATURES);
        for (k, (row, dst)) in rows.chunks_exact(NUM_FEATURES).zip(values.chunks_exact_mut(NUM_FEATURES)).enumerate() {
            match explainer.explain(row) {
                Ok(e) => {
                    dst.copy_from_slice(&e.values);
                    if !out_margins.is_null() {
                        *out_margins.add(k) = e.margin;
                    }
                }
                Err(e) => return from_explain_error(e),
            }
        }
        if !out_base.is_null() {
            *out_base = explainer.base_value();
        }
        FogStatus::Ok
    })
}

/// Loads scaler statistics saved by the trainer.
///
/// # Safety
///
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fog_scaler_load(path: *const c_char, out: *mut *mut FogScaler) -> FogStatus {
    guard(|| {
        if out.is_null() {
            return fail(FogStatus::NullPointer, "out is NULL");
        }
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match ScalerStats::load(&path) {
            Ok(stats) => {
                *out = Box::into_raw(Box::new(FogScaler { stats }));
                FogStatus::Ok
            }
            Err(e) => from_feature_error(e),
        }
    })
}

/// Releases a scaler. NULL is ignored.
///
/// # Safety
///
/// `scaler` must come from [`fog_scaler_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fog_scaler_free(scaler: *mut FogScaler) {
    if !scaler.is_null() {
        drop(Box::from_raw(scaler));
    }
}

/// Standardizes one raw feature vector into `out` (19 doubles; may alias
/// `x`).
///
/// # Safety
///
/// `x` must point to `n_features` doubles and `out` to 19 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fog_scaler_transform(
    scaler: *const FogScaler,
    x: *const f64,
    n_features: usize,
    out: *mut f64,
) -> FogStatus {
    guard(|| {
        let Some(s) = scaler.as_ref() else {
            return fail(FogStatus::NullPointer, "scaler is NULL");
        };
        if out.is_null() {
            return fail(FogStatus::NullPointer, "out is NULL");
        }
        let x = match feature_arg(x, n_features) {
            Ok(x) => x,
            Err(st) => return st,
        };
        let mut row = [0.0; NUM_FEATURES];
        row.copy_from_slice(x);
        let z = s.stats.transform_row(&row);
        std::ptr::copy(z.as_ptr(), out, NUM_FEATURES);
        FogStatus::Ok
    })
}

/// Solar elevation in degrees at a site and Unix time (seconds, UTC).
///
/// # Safety
///
/// `out` must point to one writable double.
#[no_mangle]
pub unsafe extern "C" fn fog_solar_elevation(lat_deg: f64, lon_deg: f64, unix_seconds: i64, out: *mut f64) -> FogStatus {
    guard(|| {
        if out.is_null() {
            return fail(FogStatus::NullPointer, "out is NULL");
        }
        let Some(ts) = DateTime::from_timestamp(unix_seconds, 0) else {
            return fail(FogStatus::InvalidArgument, format!("timestamp {unix_seconds} out of range"));
        };
        match fogcast::solar::solar_elevation(lat_deg, lon_deg, ts) {
            Ok(v) => {
                *out = v;
                FogStatus::Ok
            }
            Err(e) => fail(FogStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// ROC AUC of `n` scores against 0/1 labels, ties counted as half.
///
/// # Safety
///
/// `scores` and `labels` must point to `n` elements, `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn fog_roc_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> FogStatus {
    guard(|| {
        if scores.is_null() || labels.is_null() || out.is_null() {
            return fail(FogStatus::NullPointer, "scores, labels or out is NULL");
        }
        let s = std::slice::from_raw_parts(scores, n);
        let l = std::slice::from_raw_parts(labels, n);
        match fogcast::eval::roc_auc(s, l) {
            Ok(v) => {
                *out = v;
                FogStatus::Ok
            }
            Err(e @ fogcast::eval::EvalError::SingleClass) => fail(FogStatus::Undefined, e.to_string()),
            Err(e) => fail(FogStatus::InvalidArgument, e.to_string()),
        }
    })
}
