//! One-step-ahead forecasts over the test segment, confidence bands, the
//! observed-on-predicted regression line and coefficient tables.

use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::frame::DATE_FORMAT;
use crate::select::SplitPlan;
use crate::solver::FittedModel;

pub const DEFAULT_CI_MULTIPLIER: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub date: NaiveDate,
    pub observed: f64,
    pub predicted: f64,
    pub lower: f64,
    pub upper: f64,
    /// Most recent source date among the regressors used for this row.
    pub latest_input: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSeries {
    pub target: String,
    pub rows: Vec<ForecastRow>,
    pub se: f64,
    pub multiplier: f64,
}

impl ForecastSeries {
    pub fn observed(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.observed).collect()
    }

    pub fn predicted(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.predicted).collect()
    }

    /// Fraction of rows whose observation lies inside the band.
    pub fn coverage(&self) -> f64 {
        let inside = self
            .rows
            .iter()
            .filter(|r| r.lower <= r.observed && r.observed <= r.upper)
            .count();
        inside as f64 / self.rows.len() as f64
    }

    /// Rows that consumed data dated on or after their own date.
    pub fn leakage(&self) -> Vec<NaiveDate> {
        self.rows
            .iter()
            .filter(|r| r.latest_input >= r.date)
            .map(|r| r.date)
            .collect()
    }
}

/// Plot-ready CSV: `date,observed,predicted,lower,upper`, with a leading
/// `target` column when there is more than one series.
pub fn write_forecast_csv<W: Write>(series: &[ForecastSeries], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let multi = series.len() > 1;
    let mut header = vec!["date", "observed", "predicted", "lower", "upper"];
    if multi {
        header.insert(0, "target");
    }
    w.write_record(&header)?;
    for s in series {
        for r in &s.rows {
            let mut rec = vec![
                r.date.format(DATE_FORMAT).to_string(),
                r.observed.to_string(),
                r.predicted.to_string(),
                r.lower.to_string(),
                r.upper.to_string(),
            ];
            if multi {
                rec.insert(0, s.target.clone());
            }
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io("<forecast csv>", e))?;
    Ok(())
}

/// Forecast every test row from observed lags, with band half-width
/// `multiplier · se` where `se` is the model's validation RMSE.
pub fn rolling_forecast(
    model: &FittedModel,
    design: &DesignMatrix,
    split: &SplitPlan,
    multiplier: f64,
) -> Result<Vec<ForecastSeries>> {
    let se = model.validation_rmse.clone().ok_or_else(|| {
        Error::Contract("model carries no validation RMSE; supply the band basis explicitly".into())
    })?;
    rolling_forecast_with_se(model, design, split, &se, multiplier)
}

pub fn rolling_forecast_with_se(
    model: &FittedModel,
    design: &DesignMatrix,
    split: &SplitPlan,
    se: &[f64],
    multiplier: f64,
) -> Result<Vec<ForecastSeries>> {
    if split.t != design.n_rows() {
        return Err(Error::Contract(format!(
            "split covers {} rows but design has {}",
            split.t,
            design.n_rows()
        )));
    }
    if se.len() != model.k() || se.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Contract("one finite, non-negative se per target is required".into()));
    }
    if !(multiplier.is_finite() && multiplier >= 0.0) {
        return Err(Error::Config(format!("band multiplier must be >= 0, got {multiplier}")));
    }
    let test = split.test();
    if test.is_empty() {
        return Err(Error::insufficient("test segment", 1, 0));
    }
    let mut out: Vec<ForecastSeries> = (0..model.k())
        .map(|i| ForecastSeries {
            target: model.target_names[i].clone(),
            rows: Vec::with_capacity(test.len()),
            se: se[i],
            multiplier,
        })
        .collect();
    for r in test {
        let (ys, xs) = design.histories(r);
        let pred = model.predict_one_step(&ys, &xs)?;
        let latest_input = design
            .lag_dates
            .row(r)
            .iter()
            .copied()
            .max()
            .unwrap_or(NaiveDate::MIN);
        for (i, series) in out.iter_mut().enumerate() {
            let half = multiplier * series.se;
            series.rows.push(ForecastRow {
                date: design.row_dates[r],
                observed: design.y[[r, i]],
                predicted: pred[i],
                lower: pred[i] - half,
                upper: pred[i] + half,
                latest_input,
            });
        }
    }
    Ok(out)
}

/// `observed = intercept + slope · predicted`, by least squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionLine {
    pub intercept: f64,
    pub slope: f64,
    pub n: usize,
}

pub fn regression_line(series: &ForecastSeries) -> Result<RegressionLine> {
    let n = series.rows.len();
    if n < 3 {
        return Err(Error::insufficient("regression line", 3, n));
    }
    let x = series.predicted();
    let y = series.observed();
    if x.iter().all(|v| *v == x[0]) {
        return Err(Error::DegenerateRegression("predictions are constant".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok(RegressionLine {
        intercept: my - slope * mx,
        slope,
        n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub target: String,
    pub label: String,
    pub coefficient: f64,
    pub standardized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub rows: Vec<CoefficientRow>,
}

impl CoefficientTable {
    pub fn get(&self, target: &str, label: &str) -> Option<&CoefficientRow> {
        self.rows.iter().find(|r| r.target == target && r.label == label)
    }

    pub fn nonzero_labels(&self, target: &str) -> Vec<&str> {
        self.rows
            .iter()
            .filter(|r| r.target == target && r.label != "intercept" && r.coefficient != 0.0)
            .map(|r| r.label.as_str())
            .collect()
    }

    /// `target,label,coefficient,standardized`; exact zeros print as `0.0`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["target", "label", "coefficient", "standardized"])?;
        for r in &self.rows {
            w.write_record([
                r.target.clone(),
                r.label.clone(),
                format_coef(r.coefficient),
                format_coef(r.standardized),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<coefficient csv>", e))?;
        Ok(())
    }
}

fn format_coef(v: f64) -> String {
    if v == 0.0 {
        "0.0".to_string()
    } else {
        format!("{v:?}")
    }
}

/// Every coefficient, zeros included: per target the intercept, then target
/// lags and exogenous lags in design column order.
pub fn coefficient_report(model: &FittedModel) -> CoefficientTable {
    let mut rows = Vec::with_capacity(model.k() * (model.labels.len() + 1));
    for i in 0..model.k() {
        let target = model.target_names[i].clone();
        rows.push(CoefficientRow {
            target: target.clone(),
            label: "intercept".into(),
            coefficient: model.nu[i],
            standardized: model.scaling.y_mean[i],
        });
        for (j, label) in model.labels.iter().enumerate() {
            rows.push(CoefficientRow {
                target: target.clone(),
                label: label.clone(),
                coefficient: model.coef[[i, j]],
                standardized: model.coef_scaled[[i, j]],
            });
        }
    }
    CoefficientTable { rows }
}
