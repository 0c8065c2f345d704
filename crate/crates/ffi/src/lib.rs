//! C ABI over the scorefusion library.
//!
//! Objects cross the boundary as opaque handles created by `sf_*_new`,
//! `sf_*_load` or `sf_*_train` and released with the matching `sf_*_free`.
//! Every fallible call returns an [`SfStatus`]; on failure a description is
//! available from [`sf_last_error_message`] on the same thread. Panics never
//! unwind into the caller.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ndarray::{Array2, ArrayView2};
use scorefusion::dataset::{self, DataTable, LoadOptions, Schema};
use scorefusion::error::Error;
use scorefusion::fusion::{self, FusionWeights, WeightGrid};
use scorefusion::metrics::{self, Averaging, ConfusionMatrix};
use scorefusion::models::{self, Classifier, Hyperparams, ModelKind, TrainSet};
use scorefusion::pipeline::{self, RunConfig, RunReport};
use scorefusion::preprocess::TaskKind;
use scorefusion::scores::ScoreMatrix;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range, mis-sized or not valid UTF-8.
    InvalidArgument = 2,
    /// Invalid configuration or hyperparameters.
    Config = 3,
    /// Unreadable, malformed or unsuitable data.
    Data = 4,
    /// Training, scoring, fusion or evaluation failed.
    Training = 5,
    /// File system error.
    Io = 6,
    /// An internal panic was caught.
    Panic = 7,
}

/// Learner selector for [`sf_model_train`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfModelKind {
    Lr = 0,
    Svm = 1,
    Dt = 2,
    Rf = 3,
    Ann = 4,
    Ada = 5,
}

impl From<SfModelKind> for ModelKind {
    fn from(k: SfModelKind) -> Self {
        match k {
            SfModelKind::Lr => ModelKind::Lr,
            SfModelKind::Svm => ModelKind::Svm,
            SfModelKind::Dt => ModelKind::Dt,
            SfModelKind::Rf => ModelKind::Rf,
            SfModelKind::Ann => ModelKind::Ann,
            SfModelKind::Ada => ModelKind::Ada,
        }
    }
}

/// Percentages in `[0, 100]`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SfMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Row-major matrix of per-class probabilities.
pub struct SfScores(ScoreMatrix);

/// A trained classifier.
pub struct SfModel(Classifier);

/// A loaded data table.
pub struct SfTable(DataTable);

/// The result of a full experiment run.
pub struct SfReport(RunReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SfStatus {
    match e {
        Error::Io(_) => SfStatus::Io,
        Error::Stage { source, .. } => status_of(source),
        other => match other.exit_code() {
            1 => SfStatus::Config,
            2 => SfStatus::Data,
            _ => SfStatus::Training,
        },
    }
}

enum Failure {
    Status(SfStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Status(SfStatus::InvalidArgument, msg.into())
}

fn null(name: &str) -> Failure {
    Failure::Status(SfStatus::NullPointer, format!("`{name}` is null"))
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfStatus::Ok,
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            SfStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<T>(p: *mut T, name: &str) -> Result<&'static mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{name}` is not valid UTF-8")))
}

unsafe fn matrix<'a>(data: *const f64, rows: usize, cols: usize, name: &str) -> Result<ArrayView2<'a, f64>, Failure> {
    let len = rows.checked_mul(cols).ok_or_else(|| invalid("matrix size overflows"))?;
    let s = slice(data, len, name)?;
    ArrayView2::from_shape((rows, cols), s).map_err(|e| invalid(e.to_string()))
}

/// Message describing the last failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on the thread.
#[no_mangle]
pub extern "C" fn sf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Copies a row-major `rows x cols` matrix into a new score handle. Each
/// row must be a probability vector (entries in [0, 1], summing to 1).
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sf_scores_new(
    data: *const f64,
    rows: usize,
    cols: usize,
    out_scores: *mut *mut SfScores,
) -> SfStatus {
    guard(|| {
        let out_scores = out(out_scores, "out_scores")?;
        let m = matrix(data, rows, cols, "data")?.to_owned();
        let scores = ScoreMatrix::new(m).map_err(|e| Failure::Status(SfStatus::InvalidArgument, e.to_string()))?;
        *out_scores = Box::into_raw(Box::new(SfScores(scores)));
        Ok(())
    })
}

/// # Safety
/// `scores` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sf_scores_free(scores: *mut SfScores) {
    if !scores.is_null() {
        drop(Box::from_raw(scores));
    }
}

/// # Safety
/// `scores` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_scores_shape(scores: *const SfScores, rows: *mut usize, cols: *mut usize) -> SfStatus {
    guard(|| {
        let s = borrow(scores, "scores")?;
        *out(rows, "rows")? = s.0.n_rows();
        *out(cols, "cols")? = s.0.class_count();
        Ok(())
    })
}

/// Copies the scores row-major into `dest`, which holds `len` doubles
/// (exactly rows * cols).
///
/// # Safety
/// `scores` must be a live handle; `dest` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_scores_copy(scores: *const SfScores, dest: *mut f64, len: usize) -> SfStatus {
    guard(|| {
        let s = &borrow(scores, "scores")?.0;
        let need = s.n_rows() * s.class_count();
        if len != need {
            return Err(invalid(format!("destination holds {len} values, need {need}")));
        }
        let dest = slice_mut(dest, len, "dest")?;
        for (d, v) in dest.iter_mut().zip(s.as_array().iter()) {
            *d = *v;
        }
        Ok(())
    })
}

/// `w1 * a + w2 * b` with `w2 = 1 - w1`.
///
/// # Safety
/// `a`, `b` must be live handles; `out_scores` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_fuse(
    a: *const SfScores,
    b: *const SfScores,
    w1: f64,
    out_scores: *mut *mut SfScores,
) -> SfStatus {
    guard(|| {
        let (a, b) = (borrow(a, "a")?, borrow(b, "b")?);
        let out_scores = out(out_scores, "out_scores")?;
        let w = FusionWeights::new(w1).map_err(|e| invalid(e.to_string()))?;
        let fused = fusion::fuse(&a.0, &b.0, w)?;
        *out_scores = Box::into_raw(Box::new(SfScores(fused)));
        Ok(())
    })
}

/// Writes the per-row argmax class (lowest index on ties) into `labels`,
/// which holds `len` entries (exactly the row count).
///
/// # Safety
/// `scores` must be a live handle; `labels` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn sf_decide(scores: *const SfScores, labels: *mut usize, len: usize) -> SfStatus {
    guard(|| {
        let s = borrow(scores, "scores")?;
        if len != s.0.n_rows() {
            return Err(invalid(format!("label buffer holds {len}, need {}", s.0.n_rows())));
        }
        let labels = slice_mut(labels, len, "labels")?;
        labels.copy_from_slice(&fusion::decide(&s.0));
        Ok(())
    })
}

/// Searches the 19-point weight grid (w1 = 0.95 ... 0.05) for the most
/// accurate fusion of `a` and `b` against `truth`; earlier grid points win
/// ties. Accuracy is a fraction in [0, 1].
///
/// # Safety
/// `a`, `b` must be live handles; `truth` must hold `n` labels.
#[no_mangle]
pub unsafe extern "C" fn sf_grid_search(
    a: *const SfScores,
    b: *const SfScores,
    truth: *const usize,
    n: usize,
    best_w1: *mut f64,
    best_accuracy: *mut f64,
) -> SfStatus {
    guard(|| {
        let (a, b) = (borrow(a, "a")?, borrow(b, "b")?);
        let truth = slice(truth, n, "truth")?;
        let (search, _) = fusion::grid_search(&a.0, &b.0, truth, &WeightGrid::standard())?;
        *out(best_w1, "best_w1")? = search.best.w1;
        *out(best_accuracy, "best_accuracy")? = search.best_accuracy;
        Ok(())
    })
}

/// Accuracy, precision, recall and F1 from labels. Two classes use macro
/// averaging, more use support-weighted averaging.
///
/// # Safety
/// `truth` and `pred` must hold `n` labels each; `out_metrics` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_metrics(
    truth: *const usize,
    pred: *const usize,
    n: usize,
    class_count: usize,
    out_metrics: *mut SfMetrics,
) -> SfStatus {
    guard(|| {
        let truth = slice(truth, n, "truth")?;
        let pred = slice(pred, n, "pred")?;
        let dest = out(out_metrics, "out_metrics")?;
        let cm = ConfusionMatrix::from_labels(truth, pred, class_count)?;
        let mode = if class_count == 2 {
            Averaging::Macro
        } else {
            Averaging::Weighted
        };
        let m = metrics::scalar_metrics(&cm, mode)?;
        *dest = SfMetrics {
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        };
        Ok(())
    })
}

/// Macro-averaged binary metrics from confusion cells (class 1 positive).
///
/// # Safety
/// `out_metrics` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_binary_metrics(
    tp: u64,
    fp: u64,
    fn_: u64,
    tn: u64,
    out_metrics: *mut SfMetrics,
) -> SfStatus {
    guard(|| {
        let dest = out(out_metrics, "out_metrics")?;
        let m = metrics::scalar_metrics(&ConfusionMatrix::from_binary_cells(tp, fp, fn_, tn), Averaging::Macro)?;
        *dest = SfMetrics {
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        };
        Ok(())
    })
}

/// ROC-AUC in [0, 1]: the class-1 column for two classes, else the
/// one-vs-rest mean over classes present in `truth`.
///
/// # Safety
/// `scores` must be a live handle; `truth` must hold `n` labels.
#[no_mangle]
pub unsafe extern "C" fn sf_roc_auc(scores: *const SfScores, truth: *const usize, n: usize, auc: *mut f64) -> SfStatus {
    guard(|| {
        let s = borrow(scores, "scores")?;
        let truth = slice(truth, n, "truth")?;
        let dest = out(auc, "auc")?;
        let summary = metrics::roc_auc(truth, &s.0)?;
        *dest = summary
            .auc
            .ok_or_else(|| Failure::Status(SfStatus::Data, "ROC-AUC undefined: truth holds a single class".into()))?;
        Ok(())
    })
}

/// Loads a comma-separated data file with the built-in Cleveland schema
/// (`?` marks missing cells).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_table` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_table_load(
    path: *const c_char,
    has_header: bool,
    out_table: *mut *mut SfTable,
) -> SfStatus {
    guard(|| {
        let path = text(path, "path")?;
        let out_table = out(out_table, "out_table")?;
        let options = LoadOptions {
            has_header,
            ..LoadOptions::default()
        };
        let t = dataset::load_csv(path, &Schema::cleveland(), &options)?;
        *out_table = Box::into_raw(Box::new(SfTable(t)));
        Ok(())
    })
}

/// Row count and feature-column count (the target is not counted).
///
/// # Safety
/// `table` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_table_shape(table: *const SfTable, rows: *mut usize, cols: *mut usize) -> SfStatus {
    guard(|| {
        let t = borrow(table, "table")?;
        *out(rows, "rows")? = t.0.n_rows();
        *out(cols, "cols")? = t.0.n_cols();
        Ok(())
    })
}

/// # Safety
/// `table` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sf_table_free(table: *mut SfTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Trains one learner on row-major features `x` (`rows x cols`) and labels
/// `y` in `0..class_count`, with the tuned 80:20 settings for the implied
/// task (two classes: binary, otherwise multiclass). Features are used as
/// given; scale them beforehand if the learner needs it.
///
/// # Safety
/// `x` must hold `rows * cols` doubles, `y` `rows` labels; `out_model`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sf_model_train(
    kind: SfModelKind,
    x: *const f64,
    rows: usize,
    cols: usize,
    y: *const usize,
    class_count: usize,
    seed: u64,
    out_model: *mut *mut SfModel,
) -> SfStatus {
    guard(|| {
        let out_model = out(out_model, "out_model")?;
        let x: Array2<f64> = matrix(x, rows, cols, "x")?.to_owned();
        let y = slice(y, rows, "y")?;
        let task = if class_count == 2 {
            TaskKind::Binary
        } else {
            TaskKind::Multiclass
        };
        let data = TrainSet::new(&x, y, class_count)?;
        let hp = Hyperparams::tuned(task, 0.2);
        let model = models::train(kind.into(), &data, &hp, seed)?;
        *out_model = Box::into_raw(Box::new(SfModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle; `x` must hold `rows * cols` doubles;
/// `out_scores` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_model_predict_proba(
    model: *const SfModel,
    x: *const f64,
    rows: usize,
    cols: usize,
    out_scores: *mut *mut SfScores,
) -> SfStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        let out_scores = out(out_scores, "out_scores")?;
        let x = matrix(x, rows, cols, "x")?;
        let s = m.0.predict_proba(x)?;
        *out_scores = Box::into_raw(Box::new(SfScores(s)));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sf_model_free(model: *mut SfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs a full experiment described by a JSON run configuration (the same
/// document the command-line tool accepts with `--config`). Nothing is
/// written unless the report is passed to [`sf_report_write`].
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_report` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_run_experiment(config_json: *const c_char, out_report: *mut *mut SfReport) -> SfStatus {
    guard(|| {
        let json = text(config_json, "config_json")?;
        let out_report = out(out_report, "out_report")?;
        let config: RunConfig =
            serde_json::from_str(json).map_err(|e| Failure::Status(SfStatus::Config, e.to_string()))?;
        let report = pipeline::run_experiment(&config)?;
        *out_report = Box::into_raw(Box::new(SfReport(report)));
        Ok(())
    })
}

/// The report as pretty-printed JSON. Free the string with
/// [`sf_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_report_json(report: *const SfReport, out_json: *mut *mut c_char) -> SfStatus {
    guard(|| {
        let r = borrow(report, "report")?;
        let dest = out(out_json, "out_json")?;
        let json = serde_json::to_string_pretty(&r.0).map_err(Error::from)?;
        *dest = CString::new(json).map_err(|e| invalid(e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Fused test accuracy (percent) of the `index`-th fusion pair.
///
/// # Safety
/// `report` must be a live handle; `accuracy` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_report_fusion_accuracy(
    report: *const SfReport,
    index: usize,
    accuracy: *mut f64,
) -> SfStatus {
    guard(|| {
        let r = borrow(report, "report")?;
        let f =
            r.0.fusions
                .get(index)
                .ok_or_else(|| invalid(format!("fusion index {index} out of range ({})", r.0.fusions.len())))?;
        *out(accuracy, "accuracy")? = f.evaluation.accuracy;
        Ok(())
    })
}

/// Writes report.json, summary.md, summary.csv and ROC point files under
/// `dir`, creating it if needed.
///
/// # Safety
/// `report` must be a live handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sf_report_write(report: *const SfReport, dir: *const c_char) -> SfStatus {
    guard(|| {
        let r = borrow(report, "report")?;
        let dir = text(dir, "dir")?;
        pipeline::emit_report(&r.0, Path::new(dir))?;
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sf_report_free(report: *mut SfReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
