//! C ABI over the `varx` library.
//!
//! Frames and reports are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns a
//! [`VarxStatus`]; on failure [`varx_last_error_message`] describes the
//! error for the calling thread. Panics never cross the boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::OnceLock;

use chrono::NaiveDate;
use ndarray::Array2;
use varx::design::{LagMode, LagSpec};
use varx::error::ErrorCategory;
use varx::frame::{ColumnMeta, Resolution, Role, Schema, SeasonFilter, TimeSeriesFrame};
use varx::metrics::{full_report, METRIC_NAMES};
use varx::model_io::ModelDocument;
use varx::pipeline::{run_pipeline, EvaluationReport, ModelSpec};
use varx::select::{linear_grid, log_grid, RefitPolicy};
use varx::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarxStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Invalid configuration or arguments.
    Config = 2,
    /// Unreadable or inconsistent input data.
    Data = 3,
    /// Non-finite values or a degenerate or unstable fit.
    Numerical = 4,
    /// A string argument was not valid UTF-8.
    Utf8 = 5,
    /// The library panicked; this is a bug.
    Panic = 6,
    /// The requested value is undefined for this data.
    Undefined = 7,
}

/// Loaded time series.
pub struct VarxFrame(TimeSeriesFrame);

/// Result of a full pipeline run.
pub struct VarxReport(EvaluationReport);

/// Pipeline settings; start from `varx_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VarxOptions {
    /// Target lag order, at least 1.
    pub p: usize,
    /// Exogenous lag order.
    pub s: usize,
    /// Elastic-net mixing weight in [0, 1].
    pub alpha: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
    /// Nonzero for log spacing, zero for linear.
    pub lambda_log: u8,
    /// Band half-width in units of the validation RMSE.
    pub ci_multiplier: f64,
    /// Nonzero to scale regressors before fitting.
    pub standardize: u8,
    /// Nonzero for positional lags instead of calendar offsets.
    pub positional_lags: u8,
    /// 0 fits once on the training segment; m > 0 refits every m validation steps.
    pub refit_every: usize,
    /// 0 all rows, 1 growing season, 2 dormant season.
    pub season: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> VarxStatus {
    match err.category() {
        ErrorCategory::Config => VarxStatus::Config,
        ErrorCategory::Data => VarxStatus::Data,
        ErrorCategory::Numerical => VarxStatus::Numerical,
    }
}

/// Run `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), VarxStatus>) -> VarxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VarxStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            VarxStatus::Panic
        }
    }
}

fn fail(err: Error) -> VarxStatus {
    set_error(err.to_string());
    status_of(&err)
}

fn null(what: &str) -> VarxStatus {
    set_error(format!("{what} is null"));
    VarxStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, VarxStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        VarxStatus::Utf8
    })
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn varx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn varx_options_default() -> VarxOptions {
    let spec = ModelSpec::default();
    VarxOptions {
        p: spec.lag.p,
        s: spec.lag.s,
        alpha: spec.alpha,
        lambda_min: 10.0,
        lambda_max: 500.0,
        lambda_count: 24,
        lambda_log: 1,
        ci_multiplier: spec.ci_multiplier,
        standardize: 1,
        positional_lags: 0,
        refit_every: 0,
        season: 0,
    }
}

fn spec_from(opts: &VarxOptions) -> Result<ModelSpec, Error> {
    let mode = if opts.positional_lags != 0 {
        LagMode::Positional
    } else {
        LagMode::Calendar
    };
    let grid = if opts.lambda_log != 0 {
        log_grid(opts.lambda_min, opts.lambda_max, opts.lambda_count)?
    } else {
        linear_grid(opts.lambda_min, opts.lambda_max, opts.lambda_count)?
    };
    let season = match opts.season {
        0 => SeasonFilter::All,
        1 => SeasonFilter::Growing,
        2 => SeasonFilter::Dormant,
        other => return Err(Error::Config(format!("unknown season code {other}"))),
    };
    let mut spec = ModelSpec {
        lag: LagSpec::new(opts.p, opts.s, mode)?,
        alpha: opts.alpha,
        grid,
        refit: match opts.refit_every {
            0 => RefitPolicy::Fixed,
            every => RefitPolicy::Expanding { every },
        },
        ci_multiplier: opts.ci_multiplier,
        season,
        ..ModelSpec::default()
    };
    spec.fit.standardize = opts.standardize != 0;
    spec.validate()?;
    Ok(spec)
}

/// Load a CSV file. `targets` is a comma-separated list of target columns;
/// every other column becomes an exogenous predictor.
#[no_mangle]
pub unsafe extern "C" fn varx_frame_load_csv(
    path: *const c_char,
    date_column: *const c_char,
    targets: *const c_char,
    out: *mut *mut VarxFrame,
) -> VarxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let date_column = str_arg(date_column, "date_column")?;
        let targets = str_arg(targets, "targets")?;
        let schema = Schema::new(date_column, targets.split(',').map(|t| t.trim().to_string()).collect());
        let (frame, _) = TimeSeriesFrame::load_csv(path, &schema).map_err(fail)?;
        *out = Box::into_raw(Box::new(VarxFrame(frame)));
        Ok(())
    })
}

/// Build a daily frame from arrays. `dates` holds `n` dates as `YYYYMMDD`
/// integers, `target` `n` values, and `exog` `n × m` values in row-major
/// order (may be null when `m` is 0). Columns are named `y1` and `x1..xm`.
#[no_mangle]
pub unsafe extern "C" fn varx_frame_from_series(
    n: usize,
    dates: *const i32,
    target: *const f64,
    m: usize,
    exog: *const f64,
    out: *mut *mut VarxFrame,
) -> VarxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if n > 0 && (dates.is_null() || target.is_null()) {
            return Err(null("dates or target"));
        }
        if n > 0 && m > 0 && exog.is_null() {
            return Err(null("exog"));
        }
        let raw_dates = if n == 0 { &[][..] } else { std::slice::from_raw_parts(dates, n) };
        let parsed = raw_dates
            .iter()
            .map(|&d| {
                NaiveDate::from_ymd_opt(d / 10_000, (d / 100 % 100) as u32, (d % 100) as u32)
                    .ok_or_else(|| Error::Input(format!("invalid date {d}")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(fail)?;
        let y = if n == 0 { Vec::new() } else { std::slice::from_raw_parts(target, n).to_vec() };
        let x = if n == 0 || m == 0 { Vec::new() } else { std::slice::from_raw_parts(exog, n * m).to_vec() };
        let targets = Array2::from_shape_vec((n, 1), y).map_err(|e| fail(Error::Contract(e.to_string())))?;
        let exog = Array2::from_shape_vec((n, m), x).map_err(|e| fail(Error::Contract(e.to_string())))?;
        let resolution = Resolution::infer(&parsed);
        let frame = TimeSeriesFrame::new(
            parsed,
            resolution,
            vec![ColumnMeta::new("y1", "", Role::Target)],
            targets,
            (1..=m).map(|j| ColumnMeta::new(format!("x{j}"), "", Role::Exog)).collect(),
            exog,
        )
        .map_err(fail)?;
        *out = Box::into_raw(Box::new(VarxFrame(frame)));
        Ok(())
    })
}

/// Number of rows, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn varx_frame_len(frame: *const VarxFrame) -> usize {
    frame.as_ref().map_or(0, |f| f.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn varx_frame_free(frame: *mut VarxFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// Split, select lambda, fit, forecast the test segment and score it.
#[no_mangle]
pub unsafe extern "C" fn varx_pipeline_run(
    frame: *const VarxFrame,
    options: *const VarxOptions,
    out: *mut *mut VarxReport,
) -> VarxStatus {
    guard(|| {
        let frame = frame.as_ref().ok_or_else(|| null("frame"))?;
        let options = options.as_ref().ok_or_else(|| null("options"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = spec_from(options).map_err(fail)?;
        let report = run_pipeline(&frame.0, &spec).map_err(fail)?;
        *out = Box::into_raw(Box::new(VarxReport(report)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn varx_report_free(report: *mut VarxReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Test-segment metric for the first target, by name (e.g. "NSE").
#[no_mangle]
pub unsafe extern "C" fn varx_report_metric(
    report: *const VarxReport,
    name: *const c_char,
    out: *mut f64,
) -> VarxStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        let name = str_arg(name, "name")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let metrics = &report.0.metrics[0];
        let entry = metrics.entry(name).ok_or_else(|| {
            set_error(format!("unknown metric {name:?}"));
            VarxStatus::Config
        })?;
        match entry.value {
            Some(v) => {
                *out = v;
                Ok(())
            }
            None => {
                set_error(format!("{name} is undefined for this series"));
                Err(VarxStatus::Undefined)
            }
        }
    })
}

/// Selected penalty weight.
#[no_mangle]
pub unsafe extern "C" fn varx_report_lambda_star(report: *const VarxReport, out: *mut f64) -> VarxStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = report.0.lambda_path.lambda_star();
        Ok(())
    })
}

/// Number of forecast rows for the first target, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn varx_report_forecast_len(report: *const VarxReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.forecasts[0].rows.len())
}

/// Copy forecast columns for the first target into caller buffers of
/// length `len`, which must equal `varx_report_forecast_len`. Any output
/// pointer may be null to skip that column.
#[no_mangle]
pub unsafe extern "C" fn varx_report_forecast_copy(
    report: *const VarxReport,
    observed: *mut f64,
    predicted: *mut f64,
    lower: *mut f64,
    upper: *mut f64,
    len: usize,
) -> VarxStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        let rows = &report.0.forecasts[0].rows;
        if len != rows.len() {
            set_error(format!("buffer length {len} does not match {} forecast rows", rows.len()));
            return Err(VarxStatus::Config);
        }
        for (i, r) in rows.iter().enumerate() {
            for (dst, v) in [(observed, r.observed), (predicted, r.predicted), (lower, r.lower), (upper, r.upper)] {
                if !dst.is_null() {
                    *dst.add(i) = v;
                }
            }
        }
        Ok(())
    })
}

/// Fitted model as JSON; release with `varx_string_free`.
#[no_mangle]
pub unsafe extern "C" fn varx_report_model_json(report: *const VarxReport, out: *mut *mut c_char) -> VarxStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = ModelDocument::from_model(&report.0.model).to_json().map_err(fail)?;
        *out = CString::new(text).map_err(|e| fail(Error::Contract(e.to_string())))?.into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn varx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of goodness-of-fit metrics reported by `varx_metrics_compute`.
#[no_mangle]
pub extern "C" fn varx_metric_count() -> usize {
    METRIC_NAMES.len()
}

/// Static name of metric `index`, or null when out of range.
#[no_mangle]
pub extern "C" fn varx_metric_name(index: usize) -> *const c_char {
    static NAMES: OnceLock<Vec<CString>> = OnceLock::new();
    let names = NAMES.get_or_init(|| {
        METRIC_NAMES
            .iter()
            .map(|n| CString::new(*n).expect("metric names have no NUL"))
            .collect()
    });
    names.get(index).map_or(ptr::null(), |n| n.as_ptr())
}

/// Every metric for `n` observed/simulated pairs into `values`, which must
/// hold `varx_metric_count()` entries. Undefined metrics are written as NaN.
#[no_mangle]
pub unsafe extern "C" fn varx_metrics_compute(
    observed: *const f64,
    simulated: *const f64,
    n: usize,
    n_predictors: usize,
    values: *mut f64,
) -> VarxStatus {
    guard(|| {
        if observed.is_null() || simulated.is_null() || values.is_null() {
            return Err(null("observed, simulated or values"));
        }
        let obs = std::slice::from_raw_parts(observed, n);
        let sim = std::slice::from_raw_parts(simulated, n);
        let report = full_report(obs, sim, n_predictors).map_err(fail)?;
        for (i, name) in METRIC_NAMES.iter().enumerate() {
            *values.add(i) = report.get(name).unwrap_or(f64::NAN);
        }
        Ok(())
    })
}
