//! End-to-end evaluation: preprocess, build the design, split, select `λ`,
//! refit through the validation segment, forecast the test segment and score.

use serde::{Deserialize, Serialize};

use crate::design::{build_design, DesignMatrix, LagSpec};
use crate::error::{Error, Result};
use crate::forecast::{
    coefficient_report, regression_line, rolling_forecast, CoefficientTable, ForecastSeries, RegressionLine,
    DEFAULT_CI_MULTIPLIER,
};
use crate::frame::{AggregationReport, SeasonFilter, TimeSeriesFrame};
use crate::metrics::{full_report, MetricsReport, METRIC_NAMES};
use crate::select::{default_grid, select_lambda, validate_grid, LambdaPath, RefitPolicy, SplitPlan};
use crate::solver::{fit, FitOptions, FittedModel, Penalty};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub lag: LagSpec,
    pub alpha: f64,
    pub grid: Vec<f64>,
    pub refit: RefitPolicy,
    pub fit: FitOptions,
    pub ci_multiplier: f64,
    pub season: SeasonFilter,
    /// Aggregate daily rows to calendar months before building the design.
    pub monthly: bool,
    /// Columns summed (rather than averaged) by monthly aggregation.
    pub sum_columns: Vec<String>,
    /// Exogenous columns removed before fitting.
    pub drop: Vec<String>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            lag: LagSpec::default(),
            alpha: Penalty::DEFAULT_ALPHA,
            grid: default_grid(),
            refit: RefitPolicy::Fixed,
            fit: FitOptions::default(),
            ci_multiplier: DEFAULT_CI_MULTIPLIER,
            season: SeasonFilter::All,
            monthly: false,
            sum_columns: Vec::new(),
            drop: Vec::new(),
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        self.lag.validate()?;
        Penalty::new(0.0, self.alpha)?;
        validate_grid(&self.grid)?;
        if !(self.ci_multiplier.is_finite() && self.ci_multiplier >= 0.0) {
            return Err(Error::Config("CI multiplier must be finite and >= 0".into()));
        }
        if let RefitPolicy::Expanding { every: 0 } = self.refit {
            return Err(Error::Config("refit interval must be positive".into()));
        }
        if !(self.fit.tol > 0.0 && self.fit.tol.is_finite()) || self.fit.max_iter == 0 {
            return Err(Error::Config("solver tolerance and iteration cap must be positive".into()));
        }
        if self.monthly && self.season != SeasonFilter::All {
            log::info!("season filter is applied to daily rows before monthly aggregation");
        }
        Ok(())
    }
}

/// Frame after column drops, season filtering and optional aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub frame: TimeSeriesFrame,
    pub aggregation: Option<AggregationReport>,
}

pub fn preprocess(frame: &TimeSeriesFrame, spec: &ModelSpec) -> Result<Prepared> {
    let mut frame = if spec.drop.is_empty() {
        frame.clone()
    } else {
        frame.drop_columns(&spec.drop)?
    };
    if spec.season != SeasonFilter::All {
        frame = frame.filter_season(spec.season)?;
    }
    let mut aggregation = None;
    if spec.monthly {
        let (monthly, report) = frame.aggregate_monthly(&spec.sum_columns)?;
        frame = monthly;
        aggregation = Some(report);
    }
    Ok(Prepared { frame, aggregation })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub split: SplitPlan,
    pub design_rows: usize,
    pub lambda_path: LambdaPath,
    pub model: FittedModel,
    /// One series per target.
    pub forecasts: Vec<ForecastSeries>,
    /// One report per target, metrics in table order.
    pub metrics: Vec<MetricsReport>,
    /// `None` where predictions were constant.
    pub regression: Vec<Option<RegressionLine>>,
    pub coefficients: CoefficientTable,
    pub aggregation: Option<AggregationReport>,
}

/// Select `λ`, refit on rows before the test segment and score the test
/// segment. The returned model carries the validation RMSE of `λ*`.
pub fn select_and_fit(design: &DesignMatrix, spec: &ModelSpec) -> Result<(SplitPlan, LambdaPath, FittedModel)> {
    let split = SplitPlan::new(design.n_rows())?;
    let path = select_lambda(design, &split, spec.alpha, &spec.grid, spec.refit, &spec.fit)?;
    let penalty = Penalty::new(path.lambda_star(), spec.alpha)?;
    let mut model = fit(&design.slice_rows(0..split.t2), &penalty, &spec.fit)?;
    model.validation_rmse = Some(path.validation_rmse[path.chosen].clone());
    Ok((split, path, model))
}

/// Score a fitted model on the test segment of `design`.
pub fn evaluate_model(
    model: &FittedModel,
    design: &DesignMatrix,
    split: &SplitPlan,
    multiplier: f64,
) -> Result<(Vec<ForecastSeries>, Vec<MetricsReport>, Vec<Option<RegressionLine>>)> {
    let forecasts = rolling_forecast(model, design, split, multiplier)?;
    let mut metrics = Vec::with_capacity(forecasts.len());
    let mut regression = Vec::with_capacity(forecasts.len());
    for (i, series) in forecasts.iter().enumerate() {
        metrics.push(full_report(&series.observed(), &series.predicted(), model.support_size(i))?);
        regression.push(match regression_line(series) {
            Ok(line) => Some(line),
            Err(Error::DegenerateRegression(_)) => None,
            Err(e) => return Err(e),
        });
    }
    Ok((forecasts, metrics, regression))
}

fn evaluate_design(design: &DesignMatrix, spec: &ModelSpec, aggregation: Option<AggregationReport>) -> Result<EvaluationReport> {
    let (split, lambda_path, model) = select_and_fit(design, spec)?;
    let (forecasts, metrics, regression) = evaluate_model(&model, design, &split, spec.ci_multiplier)?;
    Ok(EvaluationReport {
        split,
        design_rows: design.n_rows(),
        lambda_path,
        coefficients: coefficient_report(&model),
        model,
        forecasts,
        metrics,
        regression,
        aggregation,
    })
}

pub fn run_pipeline(frame: &TimeSeriesFrame, spec: &ModelSpec) -> Result<EvaluationReport> {
    spec.validate()?;
    let prepared = preprocess(frame, spec)?;
    let design = build_design(&prepared.frame, &spec.lag)?;
    evaluate_design(&design, spec, prepared.aggregation)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub target: String,
    pub metric: String,
    pub full: Option<f64>,
    pub reduced: Option<f64>,
    /// `reduced − full`.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub rows: Vec<DeltaRow>,
}

impl DeltaTable {
    pub fn get(&self, target: &str, metric: &str) -> Option<&DeltaRow> {
        self.rows.iter().find(|r| r.target == target && r.metric == metric)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let fmt = crate::metrics::format_value;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["target", "metric", "full", "reduced", "delta"])?;
        for r in &self.rows {
            w.write_record([r.target.clone(), r.metric.clone(), fmt(r.full), fmt(r.reduced), fmt(r.delta)])?;
        }
        w.flush().map_err(|e| Error::io("<delta csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub full: EvaluationReport,
    pub reduced: EvaluationReport,
    pub delta: DeltaTable,
}

/// Run the pipeline with and without `dropped` on the same response rows.
pub fn ablation_run(frame: &TimeSeriesFrame, spec: &ModelSpec, dropped: &[String]) -> Result<AblationReport> {
    spec.validate()?;
    let exog = frame.exog_names();
    for name in dropped {
        if !exog.contains(name) {
            return Err(if frame.target_names().contains(name) {
                Error::InvalidOperation(format!("cannot drop target column {name:?}"))
            } else {
                Error::NotFound(format!("column {name:?}"))
            });
        }
    }
    let full_prep = preprocess(frame, spec)?;
    let reduced_frame = if dropped.is_empty() {
        full_prep.frame.clone()
    } else {
        full_prep.frame.drop_columns(dropped)?
    };
    let full_design = build_design(&full_prep.frame, &spec.lag)?;
    let reduced_design = build_design(&reduced_frame, &spec.lag)?;
    if full_design.row_dates != reduced_design.row_dates {
        return Err(Error::Contract("ablation designs do not share response dates".into()));
    }
    let (full, reduced) = rayon::join(
        || evaluate_design(&full_design, spec, full_prep.aggregation.clone()),
        || evaluate_design(&reduced_design, spec, full_prep.aggregation.clone()),
    );
    let (full, reduced) = (full?, reduced?);
    let mut rows = Vec::new();
    for (i, target) in full.model.target_names.iter().enumerate() {
        for name in METRIC_NAMES {
            let a = full.metrics[i].get(name);
            let b = reduced.metrics[i].get(name);
            rows.push(DeltaRow {
                target: target.clone(),
                metric: name.to_string(),
                full: a,
                reduced: b,
                delta: a.zip(b).map(|(a, b)| b - a),
            });
        }
    }
    Ok(AblationReport {
        full,
        reduced,
        delta: DeltaTable { rows },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::LagMode;
    use crate::select::log_grid;
    use crate::synth::{simulate, SynthSpec};

    fn quick_spec() -> ModelSpec {
        ModelSpec {
            lag: LagSpec::new(2, 1, LagMode::Calendar).unwrap(),
            grid: log_grid(1.0, 500.0, 8).unwrap(),
            ..ModelSpec::default()
        }
    }

    fn driven(n: usize, seed: u64) -> TimeSeriesFrame {
        // x1 drives the target, x2 is noise.
        let spec = SynthSpec::univariate(n, &[0.5], &[vec![2.0, 0.0]], 0.5, seed);
        simulate(&spec).unwrap().0
    }

    #[test]
    fn pipeline_runs_and_scores() {
        let report = run_pipeline(&driven(600, 1), &quick_spec()).unwrap();
        assert_eq!(report.forecasts[0].rows.len(), report.split.t - report.split.t2);
        let nse = report.metrics[0].get("NSE").unwrap();
        assert!(nse > 0.8, "{nse}");
        assert!(report.forecasts[0].leakage().is_empty());
        let line = report.regression[0].unwrap();
        assert!((0.9..=1.1).contains(&line.slope), "{line:?}");
    }

    #[test]
    fn empty_ablation_is_identical() {
        let frame = driven(400, 2);
        let spec = quick_spec();
        let ab = ablation_run(&frame, &spec, &[]).unwrap();
        assert!(ab.delta.rows.iter().all(|r| r.delta.map_or(true, |d| d == 0.0)));
        let single = run_pipeline(&frame, &spec).unwrap();
        assert_eq!(ab.full, single);
        assert_eq!(ab.reduced, single);
    }

    #[test]
    fn dropping_noise_barely_matters_dropping_driver_hurts() {
        let frame = driven(900, 3);
        let spec = quick_spec();
        let noise = ablation_run(&frame, &spec, &["x2".into()]).unwrap();
        let d = noise.delta.get("y1", "MSE").unwrap();
        assert!((d.delta.unwrap() / d.full.unwrap()).abs() < 0.05, "{d:?}");
        let driver = ablation_run(&frame, &spec, &["x1".into()]).unwrap();
        let d = driver.delta.get("y1", "MSE").unwrap();
        assert!(d.delta.unwrap() / d.full.unwrap() > 0.5, "{d:?}");
    }

    #[test]
    fn ablation_rejects_targets_and_unknowns() {
        let frame = driven(200, 4);
        let spec = quick_spec();
        assert!(matches!(ablation_run(&frame, &spec, &["y1".into()]), Err(Error::InvalidOperation(_))));
        assert!(matches!(ablation_run(&frame, &spec, &["nope".into()]), Err(Error::NotFound(_))));
    }

    #[test]
    fn invalid_spec_rejected() {
        let mut spec = quick_spec();
        spec.ci_multiplier = -1.0;
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
        spec = quick_spec();
        spec.grid = vec![];
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
    }
}
