//! C ABI over `lucid_core`.
//!
//! Every fallible function returns a [`LucidStatus`]; on failure a message is
//! available from [`lucid_last_error_message`] on the same thread. Strings
//! returned to the caller are owned by the caller and released with
//! [`lucid_string_free`]. Handles are opaque and released with their `_free`
//! function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use lucid_core::agents::AgentRole;
use lucid_core::ingest::load_and_clean;
use lucid_core::orchestrator::{run_ablation, run_experiment, OrchestratorError, RunArtifacts, RunConfig};
use lucid_core::preprocess::{
    dbscan, knn_relation, min_max_scale, run_pipeline, write_clean_csv, CleanRecord, PipelineConfig,
    PipelineSummary,
};
use lucid_core::reporting::scores_csv;
use lucid_core::scoring::{learning_boost, redundancy_rate, score_response, ScoringConstants};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LucidStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Parse = 5,
    Backend = 6,
    Domain = 7,
    Panic = 99,
}

/// Score components of one response.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LucidScore {
    pub base: f64,
    pub bonus: f64,
    pub penalty: f64,
    pub boost: f64,
    pub raw: f64,
    pub clamped: f64,
}

/// Role codes accepted by [`lucid_score_response`].
pub const LUCID_ROLE_ANALYSIS: u32 = 0;
pub const LUCID_ROLE_FEEDBACK: u32 = 1;
pub const LUCID_ROLE_PREDICTOR: u32 = 2;
pub const LUCID_ROLE_OPTIMIZER: u32 = 3;

/// Preprocessed records of one CSV file.
pub struct LucidDataset {
    records: Vec<CleanRecord>,
    summary: PipelineSummary,
}

/// A finished run.
pub struct LucidRun {
    artifacts: RunArtifacts,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let msg = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(LucidStatus, String);

impl Failure {
    fn new(status: LucidStatus, message: impl Into<String>) -> Self {
        Self(status, message.into())
    }
}

impl From<OrchestratorError> for Failure {
    fn from(e: OrchestratorError) -> Self {
        Failure(run_status(&e), e.to_string())
    }
}

fn run_status(e: &OrchestratorError) -> LucidStatus {
    match e {
        OrchestratorError::Config(_) => LucidStatus::InvalidArgument,
        OrchestratorError::Io { .. } => LucidStatus::Io,
        OrchestratorError::Backend { .. } => LucidStatus::Backend,
        OrchestratorError::Arm { source, .. } => run_status(source),
        _ => LucidStatus::Domain,
    }
}

/// Runs `f`, translating failures and panics into a status plus last-error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LucidStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LucidStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LucidStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(LucidStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(LucidStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::new(LucidStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::new(LucidStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn non_null<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(LucidStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

fn role(code: u32) -> Result<AgentRole, Failure> {
    AgentRole::ALL
        .get(code as usize)
        .copied()
        .ok_or_else(|| Failure::new(LucidStatus::InvalidArgument, format!("unknown role code {code}")))
}

fn points(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    xs.iter().copied().zip(ys.iter().copied()).collect()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn lucid_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lucid_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Learning boost at `epoch` under the default constants.
#[no_mangle]
pub extern "C" fn lucid_learning_boost(epoch: u64) -> f64 {
    learning_boost(epoch, &ScoringConstants::default())
}

/// Scores `text` for `role` against `history_len` earlier responses of the
/// same role, under the default constants.
///
/// # Safety
/// `text` must be a NUL-terminated string; `history` must point to
/// `history_len` NUL-terminated strings (or be null when the length is 0);
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lucid_score_response(
    role_code: u32,
    text: *const c_char,
    history: *const *const c_char,
    history_len: usize,
    epoch: u64,
    out: *mut LucidScore,
) -> LucidStatus {
    guard(|| {
        non_null(out, "out")?;
        let role = role(role_code)?;
        let text = str_arg(text, "text")?;
        let history: Vec<&str> = slice_arg(history, history_len, "history")?
            .iter()
            .map(|&p| str_arg(p, "history entry"))
            .collect::<Result<_, _>>()?;
        let s = score_response(role, text, &history, epoch, &ScoringConstants::default());
        *out = LucidScore {
            base: s.base,
            bonus: s.bonus,
            penalty: s.penalty,
            boost: s.boost,
            raw: s.raw,
            clamped: s.clamped,
        };
        Ok(())
    })
}

/// Share of `len` responses that repeat an earlier one.
///
/// # Safety
/// `responses` must point to `len` NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lucid_redundancy_rate(
    responses: *const *const c_char,
    len: usize,
    out: *mut f64,
) -> LucidStatus {
    guard(|| {
        non_null(out, "out")?;
        let texts: Vec<&str> = slice_arg(responses, len, "responses")?
            .iter()
            .map(|&p| str_arg(p, "response"))
            .collect::<Result<_, _>>()?;
        *out = redundancy_rate(&texts).map_err(|e| Failure::new(LucidStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

/// Cluster labels (`-1` for noise) for `n` points given as separate x and y arrays.
///
/// # Safety
/// `xs`, `ys` must hold `n` values and `labels` must have room for `n`.
#[no_mangle]
pub unsafe extern "C" fn lucid_dbscan(
    xs: *const f64,
    ys: *const f64,
    n: usize,
    eps: f64,
    min_pts: usize,
    labels: *mut i64,
) -> LucidStatus {
    guard(|| {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Failure::new(LucidStatus::InvalidArgument, "eps must be positive and finite"));
        }
        let pts = points(slice_arg(xs, n, "xs")?, slice_arg(ys, n, "ys")?);
        let out = out_slice(labels, n, "labels")?;
        out.copy_from_slice(&dbscan(&pts, eps, min_pts));
        Ok(())
    })
}

/// Mean distance from each of `n` points to its `k` nearest others.
///
/// # Safety
/// `xs`, `ys` must hold `n` values and `out` must have room for `n`.
#[no_mangle]
pub unsafe extern "C" fn lucid_knn_relation(
    xs: *const f64,
    ys: *const f64,
    n: usize,
    k: usize,
    out: *mut f64,
) -> LucidStatus {
    guard(|| {
        let pts = points(slice_arg(xs, n, "xs")?, slice_arg(ys, n, "ys")?);
        let rel = knn_relation(&pts, k).map_err(|e| Failure::new(LucidStatus::InvalidArgument, e.to_string()))?;
        out_slice(out, n, "out")?.copy_from_slice(&rel);
        Ok(())
    })
}

/// Min-max scales `n` values into `[0, 1]`.
///
/// # Safety
/// `values` must hold `n` values and `out` must have room for `n`.
#[no_mangle]
pub unsafe extern "C" fn lucid_min_max_scale(values: *const f64, n: usize, out: *mut f64) -> LucidStatus {
    guard(|| {
        let scaled = min_max_scale(slice_arg(values, n, "values")?)
            .map_err(|e| Failure::new(LucidStatus::InvalidArgument, e.to_string()))?;
        out_slice(out, n, "out")?.copy_from_slice(&scaled);
        Ok(())
    })
}

/// Loads, imputes and feature-engineers a crime CSV with default pipeline settings.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable. On success
/// `*out` owns a handle to release with [`lucid_dataset_free`].
#[no_mangle]
pub unsafe extern "C" fn lucid_dataset_load(path: *const c_char, out: *mut *mut LucidDataset) -> LucidStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let path = PathBuf::from(str_arg(path, "path")?);
        let pruned = load_and_clean(&path).map_err(|e| {
            let status = match e {
                lucid_core::ingest::IngestError::Io { .. } => LucidStatus::Io,
                _ => LucidStatus::Parse,
            };
            Failure::new(status, e.to_string())
        })?;
        let (records, summary) = run_pipeline(&pruned, &PipelineConfig::default())
            .map_err(|e| Failure::new(LucidStatus::Domain, e.to_string()))?;
        *out = Box::into_raw(Box::new(LucidDataset { records, summary }));
        Ok(())
    })
}

/// Number of records, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lucid_dataset_len(dataset: *const LucidDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.records.len())
}

/// Number of spatial clusters, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lucid_dataset_cluster_count(dataset: *const LucidDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.summary.cluster_count)
}

/// Writes the clean records as CSV.
///
/// # Safety
/// `dataset` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lucid_dataset_write_csv(dataset: *const LucidDataset, path: *const c_char) -> LucidStatus {
    guard(|| {
        let d = dataset
            .as_ref()
            .ok_or_else(|| Failure::new(LucidStatus::NullPointer, "dataset is null"))?;
        let path = PathBuf::from(str_arg(path, "path")?);
        write_clean_csv(&path, &d.records).map_err(|e| Failure::new(LucidStatus::Io, e.to_string()))
    })
}

/// # Safety
/// `dataset` must be null or a handle from [`lucid_dataset_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lucid_dataset_free(dataset: *mut LucidDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

fn parse_config(json: &str) -> Result<RunConfig, Failure> {
    RunConfig::from_json(json).map_err(|e| Failure::new(LucidStatus::Parse, e.to_string()))
}

/// Runs an experiment described by a JSON run configuration and writes its
/// artifacts to the configured output directory.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` writable. On
/// success `*out` owns a handle to release with [`lucid_run_free`].
#[no_mangle]
pub unsafe extern "C" fn lucid_run_experiment(config_json: *const c_char, out: *mut *mut LucidRun) -> LucidStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let config = parse_config(str_arg(config_json, "config_json")?)?;
        let artifacts = run_experiment(&config)?;
        *out = Box::into_raw(Box::new(LucidRun { artifacts }));
        Ok(())
    })
}

/// Number of transcript messages, or 0 for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lucid_run_message_count(run: *const LucidRun) -> usize {
    run.as_ref().map_or(0, |r| r.artifacts.transcript.messages.len())
}

/// Run summary as JSON; free with [`lucid_string_free`]. Null for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lucid_run_summary_json(run: *const LucidRun) -> *mut c_char {
    run.as_ref()
        .map_or(ptr::null_mut(), |r| into_c_string(r.artifacts.summary.to_json_pretty()))
}

/// Per-message score table as CSV; free with [`lucid_string_free`]. Null for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lucid_run_scores_csv(run: *const LucidRun) -> *mut c_char {
    run.as_ref()
        .map_or(ptr::null_mut(), |r| into_c_string(scores_csv(&r.artifacts.transcript.messages)))
}

/// # Safety
/// `run` must be null or a handle from [`lucid_run_experiment`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lucid_run_free(run: *mut LucidRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Runs both ablation arms and returns the report as JSON through `out_json`
/// (free with [`lucid_string_free`]).
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn lucid_run_ablation(config_json: *const c_char, out_json: *mut *mut c_char) -> LucidStatus {
    guard(|| {
        non_null(out_json, "out_json")?;
        *out_json = ptr::null_mut();
        let config = parse_config(str_arg(config_json, "config_json")?)?;
        let report = run_ablation(&config)?;
        *out_json = into_c_string(report.to_json_pretty());
        Ok(())
    })
}
