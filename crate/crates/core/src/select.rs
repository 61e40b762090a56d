//! Penalty selection by rolling one-step forecast error and lag-order
//! selection by BIC.

use std::collections::HashSet;
use std::io::Write;
use std::ops::Range;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{build_design, DesignMatrix, LagMode, LagSpec};
use crate::error::{Error, Result};
use crate::frame::TimeSeriesFrame;
use crate::solver::{fit, FitOptions, FittedModel, Penalty};

/// Train / validate / test segmentation of `t` design rows at `⌊t/3⌋` and `⌊2t/3⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub t: usize,
    pub t1: usize,
    pub t2: usize,
}

impl SplitPlan {
    pub fn new(t: usize) -> Result<Self> {
        let plan = Self {
            t,
            t1: t / 3,
            t2: 2 * t / 3,
        };
        if !(1 <= plan.t1 && plan.t1 < plan.t2 && plan.t2 < t) {
            return Err(Error::insufficient("train/validate/test split", 3, t));
        }
        Ok(plan)
    }

    pub fn train(&self) -> Range<usize> {
        0..self.t1
    }

    pub fn validate(&self) -> Range<usize> {
        self.t1..self.t2
    }

    pub fn test(&self) -> Range<usize> {
        self.t2..self.t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "policy")]
pub enum RefitPolicy {
    /// Fit once on the training segment.
    #[default]
    Fixed,
    /// Refit on all rows before the forecast origin every `every` validation steps.
    Expanding { every: usize },
}

impl std::str::FromStr for RefitPolicy {
    type Err = Error;

    /// `fixed` or `expanding:<m>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if lower == "fixed" {
            return Ok(RefitPolicy::Fixed);
        }
        if let Some(rest) = lower.strip_prefix("expanding") {
            let every = match rest.strip_prefix(':') {
                Some(m) => m
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad refit interval {m:?}")))?,
                None if rest.is_empty() => 1,
                None => return Err(Error::Config(format!("unknown refit policy {s:?}"))),
            };
            if every == 0 {
                return Err(Error::Config("refit interval must be positive".into()));
            }
            return Ok(RefitPolicy::Expanding { every });
        }
        Err(Error::Config(format!("unknown refit policy {s:?}")))
    }
}

impl std::fmt::Display for RefitPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RefitPolicy::Fixed => write!(f, "fixed"),
            RefitPolicy::Expanding { every } => write!(f, "expanding:{every}"),
        }
    }
}

/// Log-spaced grid of `count` points over `[min, max]`.
pub fn log_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min && count >= 2) && !(count == 1 && min > 0.0 && max == min) {
        return Err(Error::Config(format!("invalid log grid {min}:{max}:{count}")));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let (lo, hi) = (min.ln(), max.ln());
    let mut grid: Vec<f64> = (0..count)
        .map(|i| (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp())
        .collect();
    grid[0] = min;
    grid[count - 1] = max;
    Ok(grid)
}

pub fn linear_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min >= 0.0 && max > min && count >= 2) && !(count == 1 && min >= 0.0 && max == min) {
        return Err(Error::Config(format!("invalid linear grid {min}:{max}:{count}")));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    Ok((0..count)
        .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
        .collect())
}

/// 24 log-spaced values over [10, 500].
pub fn default_grid() -> Vec<f64> {
    log_grid(10.0, 500.0, 24).expect("static grid is valid")
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("lambda grid is empty".into()));
    }
    if grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::Config("lambda values must be finite and >= 0".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("lambda grid must be strictly increasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaPath {
    pub grid: Vec<f64>,
    pub msfe: Vec<f64>,
    /// Per λ, per target: root mean squared one-step error over validation rows.
    pub validation_rmse: Vec<Vec<f64>>,
    pub chosen: usize,
}

impl LambdaPath {
    pub fn lambda_star(&self) -> f64 {
        self.grid[self.chosen]
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["lambda", "msfe", "chosen"])?;
        for (i, (l, m)) in self.grid.iter().zip(&self.msfe).enumerate() {
            w.write_record([l.to_string(), m.to_string(), (i == self.chosen).to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<lambda path csv>", e))?;
        Ok(())
    }
}

/// One-step forecast errors, per target, for `rows` of `design`.
fn forecast_errors(model: &FittedModel, design: &DesignMatrix, rows: Range<usize>) -> Vec<Vec<f64>> {
    rows.map(|r| {
        model
            .predict_row(design.z.row(r))
            .iter()
            .zip(design.y.row(r))
            .map(|(p, o)| p - o)
            .collect()
    })
    .collect()
}

struct GridPoint {
    msfe: f64,
    rmse: Vec<f64>,
}

fn evaluate_lambda(
    design: &DesignMatrix,
    split: &SplitPlan,
    penalty: &Penalty,
    refit: RefitPolicy,
    opts: &FitOptions,
) -> Result<GridPoint> {
    let k = design.k();
    let mut errors: Vec<Vec<f64>> = Vec::with_capacity(split.t2 - split.t1);
    match refit {
        RefitPolicy::Fixed => {
            let model = fit(&design.slice_rows(split.train()), penalty, opts)?;
            errors = forecast_errors(&model, design, split.validate());
        }
        RefitPolicy::Expanding { every } => {
            let mut model = None;
            for (i, r) in split.validate().enumerate() {
                if i % every == 0 {
                    model = Some(fit(&design.slice_rows(0..r), penalty, opts)?);
                }
                let m = model.as_ref().expect("fit at step 0");
                errors.extend(forecast_errors(m, design, r..r + 1));
            }
        }
    }
    let n_val = errors.len();
    let sum_sq: f64 = errors.iter().flatten().map(|e| e * e).sum();
    let rmse = (0..k)
        .map(|i| (errors.iter().map(|e| e[i] * e[i]).sum::<f64>() / n_val as f64).sqrt())
        .collect();
    Ok(GridPoint {
        msfe: sum_sq / (n_val - 1) as f64,
        rmse,
    })
}

/// Choose `λ` minimizing the validation one-step MSFE
/// `Σ ‖ŷ_{t+1} − y_{t+1}‖² / (T2 − T1 − 1)`; ties go to the larger `λ`.
pub fn select_lambda(
    design: &DesignMatrix,
    split: &SplitPlan,
    alpha: f64,
    grid: &[f64],
    refit: RefitPolicy,
    opts: &FitOptions,
) -> Result<LambdaPath> {
    validate_grid(grid)?;
    if split.t != design.n_rows() {
        return Err(Error::Contract(format!(
            "split covers {} rows but design has {}",
            split.t,
            design.n_rows()
        )));
    }
    let n_val = split.t2 - split.t1;
    if n_val < 2 {
        return Err(Error::insufficient("validation segment", 2, n_val));
    }
    let points: Vec<GridPoint> = grid
        .par_iter()
        .map(|&lambda| evaluate_lambda(design, split, &Penalty::new(lambda, alpha)?, refit, opts))
        .collect::<Result<_>>()?;
    let msfe: Vec<f64> = points.iter().map(|p| p.msfe).collect();
    let mut chosen = 0;
    for (i, m) in msfe.iter().enumerate() {
        if *m <= msfe[chosen] {
            chosen = i;
        }
    }
    Ok(LambdaPath {
        grid: grid.to_vec(),
        msfe,
        validation_rmse: points.into_iter().map(|p| p.rmse).collect(),
        chosen,
    })
}

/// `n·ln(RSS/n) + k·ln(n)` per target equation (summed), where `k` counts
/// nonzero penalized coefficients plus the intercept.
pub fn bic(design: &DesignMatrix, model: &FittedModel) -> Result<f64> {
    let n = design.n_rows();
    let needed = model.support.len() + 2;
    if n < needed {
        return Err(Error::insufficient("BIC", needed, n));
    }
    let fitted = model.predict_design(design)?;
    let nf = n as f64;
    let mut total = 0.0;
    for i in 0..design.k() {
        let rss: f64 = design
            .y
            .column(i)
            .iter()
            .zip(fitted.column(i))
            .map(|(y, f)| (y - f).powi(2))
            .sum();
        if rss <= 0.0 {
            return Err(Error::DegenerateFit(
                "zero residual sum of squares gives an infinite likelihood".into(),
            ));
        }
        let params = (model.support_size(i) + 1) as f64;
        total += nf * (rss / nf).ln() + params * nf.ln();
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCandidate {
    pub p: usize,
    pub s: usize,
    pub lambda: f64,
    pub bic: f64,
    pub support_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderScan {
    pub candidates: Vec<OrderCandidate>,
    pub chosen: usize,
    /// Response rows shared by every candidate.
    pub rows: usize,
}

impl OrderScan {
    pub fn chosen_order(&self) -> (usize, usize) {
        let c = &self.candidates[self.chosen];
        (c.p, c.s)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["p", "s", "lambda", "bic", "support_size", "chosen"])?;
        for (i, c) in self.candidates.iter().enumerate() {
            w.write_record([
                c.p.to_string(),
                c.s.to_string(),
                c.lambda.to_string(),
                c.bic.to_string(),
                c.support_size.to_string(),
                (i == self.chosen).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<order scan csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectOptions {
    pub alpha: f64,
    pub grid: Vec<f64>,
    pub mode: LagMode,
    pub refit: RefitPolicy,
    pub fit: FitOptions,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            alpha: Penalty::DEFAULT_ALPHA,
            grid: default_grid(),
            mode: LagMode::Calendar,
            refit: RefitPolicy::Fixed,
            fit: FitOptions::default(),
        }
    }
}

/// Scan every `(p, s)` pair: select `λ` on the validation segment, refit on
/// the training segment and score BIC there. All candidates share the same
/// response rows. Ties go to the smaller `p`, then the smaller `s`.
pub fn select_order(
    frame: &TimeSeriesFrame,
    p_range: &[usize],
    s_range: &[usize],
    opts: &SelectOptions,
) -> Result<OrderScan> {
    if p_range.is_empty() || s_range.is_empty() {
        return Err(Error::Config("order ranges must be non-empty".into()));
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for &p in p_range {
        for &s in s_range {
            pairs.push((p, s));
        }
    }
    pairs.sort_unstable();
    pairs.dedup();

    let designs: Vec<DesignMatrix> = pairs
        .iter()
        .map(|&(p, s)| build_design(frame, &LagSpec::new(p, s, opts.mode)?))
        .collect::<Result<_>>()?;
    let mut common: HashSet<NaiveDate> = designs[0].row_dates.iter().copied().collect();
    for d in &designs[1..] {
        let dates: HashSet<NaiveDate> = d.row_dates.iter().copied().collect();
        common.retain(|x| dates.contains(x));
    }
    let designs: Vec<DesignMatrix> = designs.iter().map(|d| d.retain_dates(&common)).collect();
    let rows = common.len();
    let split = SplitPlan::new(rows)?;

    let candidates: Vec<OrderCandidate> = pairs
        .par_iter()
        .zip(designs.par_iter())
        .map(|(&(p, s), design)| {
            let path = select_lambda(design, &split, opts.alpha, &opts.grid, opts.refit, &opts.fit)?;
            let train = design.slice_rows(split.train());
            let model = fit(&train, &Penalty::new(path.lambda_star(), opts.alpha)?, &opts.fit)?;
            Ok(OrderCandidate {
                p,
                s,
                lambda: path.lambda_star(),
                bic: bic(&train, &model)?,
                support_size: model.support.len(),
            })
        })
        .collect::<Result<_>>()?;

    let mut chosen = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.bic < candidates[chosen].bic {
            chosen = i;
        }
    }
    Ok(OrderScan {
        candidates,
        chosen,
        rows,
    })
}
