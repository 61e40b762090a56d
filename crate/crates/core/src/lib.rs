//! Sparse elastic-net VARX models for water-table depth and other daily
//! environmental series.
//!
//! The crate covers loading and aligning series ([`frame`]), building lagged
//! design matrices ([`design`]), the coordinate-descent solver ([`solver`]),
//! penalty and order selection ([`select`]), rolling one-step forecasts
//! ([`forecast`]), goodness-of-fit metrics ([`metrics`]), synthetic data
//! ([`synth`]) and the end-to-end pipeline used by the `varx` binary.

pub mod cli;
pub mod config;
pub mod design;
pub mod error;
pub mod forecast;
pub mod frame;
pub mod metrics;
pub mod model_io;
pub mod pipeline;
pub mod select;
pub mod solver;
pub mod synth;

#[cfg(test)]
mod testutil;

pub use design::{build_design, DesignMatrix, LagMode, LagSpec};
pub use error::{Error, ErrorCategory, Result};
pub use frame::{Schema, SeasonFilter, TimeSeriesFrame};
pub use forecast::{coefficient_report, regression_line, rolling_forecast, ForecastSeries};
pub use metrics::{full_report, MetricsReport};
pub use model_io::ModelDocument;
pub use pipeline::{ablation_run, run_pipeline, EvaluationReport, ModelSpec};
pub use select::{select_lambda, select_order, RefitPolicy, SplitPlan};
pub use solver::{fit, FitOptions, FittedModel, Penalty};
