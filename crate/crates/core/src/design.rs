//! Lag-embedded regression systems.
//!
//! A response row dated `t` is paired with `p` lags of every target and `s`
//! lags of every exogenous series. Columns are ordered by lag: all target
//! lags first (`Y1L1, Y2L1, …, Y1Lp, …`), then exogenous lag 1 for every
//! predictor, then lag 2, and so on (`Rainfall1, DailyFlow1, …, Rainfall2`).

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::ops::Range;

use chrono::{Months, NaiveDate};
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Resolution, TimeSeriesFrame, DATE_FORMAT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LagMode {
    /// Lags are true calendar offsets; rows whose lag dates are absent are skipped.
    #[default]
    Calendar,
    /// Lags are adjacent retained rows, regardless of gaps.
    Positional,
}

impl std::str::FromStr for LagMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "calendar" => Ok(LagMode::Calendar),
            "positional" => Ok(LagMode::Positional),
            other => Err(Error::Config(format!("unknown lag mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagSpec {
    pub p: usize,
    pub s: usize,
    pub mode: LagMode,
}

impl Default for LagSpec {
    fn default() -> Self {
        Self {
            p: 4,
            s: 2,
            mode: LagMode::Calendar,
        }
    }
}

impl LagSpec {
    pub fn new(p: usize, s: usize, mode: LagMode) -> Result<Self> {
        let spec = Self { p, s, mode };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Config("target lag order p must be at least 1".into()));
        }
        Ok(())
    }

    pub fn max_lag(&self) -> usize {
        self.p.max(self.s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Target,
    Exog,
}

/// Where a regressor column comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSource {
    pub kind: SourceKind,
    pub index: usize,
    pub lag: usize,
}

/// Column sources and labels for a (k, m, p, s) layout.
pub fn column_layout(
    target_count: usize,
    exog_names: &[String],
    p: usize,
    s: usize,
) -> (Vec<ColumnSource>, Vec<String>) {
    let mut sources = Vec::with_capacity(target_count * p + exog_names.len() * s);
    let mut labels = Vec::with_capacity(sources.capacity());
    for lag in 1..=p {
        for index in 0..target_count {
            sources.push(ColumnSource {
                kind: SourceKind::Target,
                index,
                lag,
            });
            labels.push(format!("Y{}L{}", index + 1, lag));
        }
    }
    for lag in 1..=s {
        for (index, name) in exog_names.iter().enumerate() {
            sources.push(ColumnSource {
                kind: SourceKind::Exog,
                index,
                lag,
            });
            labels.push(format!("{name}{lag}"));
        }
    }
    (sources, labels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    /// Responses, `n_eff × k`.
    pub y: Array2<f64>,
    /// Regressors, `n_eff × (k·p + m·s)`.
    pub z: Array2<f64>,
    pub row_dates: Vec<NaiveDate>,
    /// Source date of every regressor cell, `n_eff × columns`.
    pub lag_dates: Array2<NaiveDate>,
    pub col_labels: Vec<String>,
    pub columns: Vec<ColumnSource>,
    pub target_names: Vec<String>,
    pub exog_names: Vec<String>,
    pub p: usize,
    pub s: usize,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.y.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.z.ncols()
    }

    pub fn k(&self) -> usize {
        self.y.ncols()
    }

    pub fn m(&self) -> usize {
        self.exog_names.len()
    }

    pub fn slice_rows(&self, rows: Range<usize>) -> DesignMatrix {
        let idx: Vec<usize> = rows.collect();
        self.select_rows(&idx)
    }

    pub fn select_rows(&self, idx: &[usize]) -> DesignMatrix {
        DesignMatrix {
            y: self.y.select(Axis(0), idx),
            z: self.z.select(Axis(0), idx),
            row_dates: idx.iter().map(|&i| self.row_dates[i]).collect(),
            lag_dates: self.lag_dates.select(Axis(0), idx),
            col_labels: self.col_labels.clone(),
            columns: self.columns.clone(),
            target_names: self.target_names.clone(),
            exog_names: self.exog_names.clone(),
            p: self.p,
            s: self.s,
        }
    }

    /// Keep only rows whose response date is in `dates`.
    pub fn retain_dates(&self, dates: &HashSet<NaiveDate>) -> DesignMatrix {
        let idx: Vec<usize> = (0..self.n_rows())
            .filter(|&i| dates.contains(&self.row_dates[i]))
            .collect();
        self.select_rows(&idx)
    }

    /// Cells whose source date is not strictly before the row's response date.
    pub fn lookahead_violations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (r, date) in self.row_dates.iter().enumerate() {
            for c in 0..self.n_cols() {
                if self.lag_dates[[r, c]] >= *date {
                    out.push((r, c));
                }
            }
        }
        out
    }

    /// Split a regressor row back into target and exogenous lag histories,
    /// most recent first.
    pub fn histories(&self, row: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut ys = vec![vec![0.0; self.k()]; self.p];
        let mut xs = vec![vec![0.0; self.m()]; self.s];
        for (c, src) in self.columns.iter().enumerate() {
            let v = self.z[[row, c]];
            match src.kind {
                SourceKind::Target => ys[src.lag - 1][src.index] = v,
                SourceKind::Exog => xs[src.lag - 1][src.index] = v,
            }
        }
        (ys, xs)
    }

    /// Debug export: `date, <targets>, <col_labels>`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_string()];
        header.extend(self.target_names.iter().cloned());
        header.extend(self.col_labels.iter().cloned());
        w.write_record(&header)?;
        for r in 0..self.n_rows() {
            let mut rec = vec![self.row_dates[r].format(DATE_FORMAT).to_string()];
            rec.extend(self.y.row(r).iter().map(|v| v.to_string()));
            rec.extend(self.z.row(r).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<design csv>", e))?;
        Ok(())
    }
}

fn step_back(date: NaiveDate, resolution: Resolution, lag: usize) -> Option<NaiveDate> {
    match resolution {
        Resolution::Daily => date.checked_sub_signed(chrono::Duration::days(lag as i64)),
        Resolution::Monthly => date.checked_sub_months(Months::new(lag as u32)),
    }
}

pub fn build_design(frame: &TimeSeriesFrame, spec: &LagSpec) -> Result<DesignMatrix> {
    spec.validate()?;
    let n = frame.len();
    let max_lag = spec.max_lag();
    if n <= max_lag {
        return Err(Error::insufficient("lag design", max_lag + 1, n));
    }
    let k = frame.targets().ncols();
    let exog_names = frame.exog_names();
    let (columns, labels) = column_layout(k, &exog_names, spec.p, spec.s);
    let dates = frame.dates();

    // For each candidate response row, the frame row index of each lag 1..=max_lag.
    let mut rows: Vec<(usize, Vec<usize>)> = Vec::new();
    match spec.mode {
        LagMode::Positional => {
            for t in max_lag..n {
                rows.push((t, (1..=max_lag).map(|l| t - l).collect()));
            }
        }
        LagMode::Calendar => {
            let index: HashMap<NaiveDate, usize> =
                dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
            for (t, date) in dates.iter().enumerate() {
                let lags: Option<Vec<usize>> = (1..=max_lag)
                    .map(|l| step_back(*date, frame.resolution(), l).and_then(|d| index.get(&d).copied()))
                    .collect();
                if let Some(lags) = lags {
                    rows.push((t, lags));
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::insufficient("lag design (complete lag windows)", 1, 0));
    }

    let q = columns.len();
    let n_eff = rows.len();
    let mut y = Array2::zeros((n_eff, k));
    let mut z = Array2::zeros((n_eff, q));
    let mut lag_dates = Array2::from_elem((n_eff, q), dates[0]);
    let mut row_dates = Vec::with_capacity(n_eff);
    for (r, (t, lags)) in rows.iter().enumerate() {
        row_dates.push(dates[*t]);
        y.row_mut(r).assign(&frame.targets().row(*t));
        for (c, src) in columns.iter().enumerate() {
            let source_row = lags[src.lag - 1];
            z[[r, c]] = match src.kind {
                SourceKind::Target => frame.targets()[[source_row, src.index]],
                SourceKind::Exog => frame.exog()[[source_row, src.index]],
            };
            lag_dates[[r, c]] = dates[source_row];
        }
    }
    Ok(DesignMatrix {
        y,
        z,
        row_dates,
        lag_dates,
        col_labels: labels,
        columns,
        target_names: frame.target_names(),
        exog_names,
        p: spec.p,
        s: spec.s,
    })
}

/// Column means and sample standard deviations of a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingInfo {
    /// Whether regressors were divided by their sd (they are always centered).
    pub enabled: bool,
    pub z_mean: Vec<f64>,
    pub z_sd: Vec<f64>,
    pub constant: Vec<bool>,
    pub y_mean: Vec<f64>,
}

impl ScalingInfo {
    /// Statistics of `design`; when `scale` is false every sd is 1 (centering only).
    pub fn compute(design: &DesignMatrix, scale: bool) -> Self {
        let n = design.n_rows();
        let z_mean: Vec<f64> = design
            .z
            .columns()
            .into_iter()
            .map(|c| c.sum() / n as f64)
            .collect();
        let y_mean: Vec<f64> = design
            .y
            .columns()
            .into_iter()
            .map(|c| c.sum() / n as f64)
            .collect();
        let mut z_sd = vec![1.0; design.n_cols()];
        let mut constant = vec![false; design.n_cols()];
        for (j, col) in design.z.columns().into_iter().enumerate() {
            let first = col[0];
            constant[j] = col.iter().all(|v| *v == first);
            if scale && !constant[j] && n >= 2 {
                let ss: f64 = col.iter().map(|v| (v - z_mean[j]).powi(2)).sum();
                let sd = (ss / (n - 1) as f64).sqrt();
                if sd > 0.0 {
                    z_sd[j] = sd;
                }
            }
        }
        Self {
            enabled: scale,
            z_mean,
            z_sd,
            constant,
            y_mean,
        }
    }

    pub fn identity(q: usize, k: usize) -> Self {
        Self {
            enabled: true,
            z_mean: vec![0.0; q],
            z_sd: vec![1.0; q],
            constant: vec![false; q],
            y_mean: vec![0.0; k],
        }
    }

    /// Centered (and possibly scaled) copies of `z` and `y`.
    pub fn apply(&self, design: &DesignMatrix) -> (Array2<f64>, Array2<f64>) {
        let mut z = design.z.clone();
        for (j, mut col) in z.columns_mut().into_iter().enumerate() {
            let (m, sd) = (self.z_mean[j], self.z_sd[j]);
            col.mapv_inplace(|v| (v - m) / sd);
        }
        let mut y = design.y.clone();
        for (i, mut col) in y.columns_mut().into_iter().enumerate() {
            let m = self.y_mean[i];
            col.mapv_inplace(|v| v - m);
        }
        (z, y)
    }
}

/// Standardize regressors with sample statistics and center responses.
pub fn standardize(design: &DesignMatrix) -> Result<(DesignMatrix, ScalingInfo)> {
    if design.n_rows() < 2 {
        return Err(Error::insufficient("standardize", 2, design.n_rows()));
    }
    let info = ScalingInfo::compute(design, true);
    let (z, y) = info.apply(design);
    let mut out = design.clone();
    out.z = z;
    out.y = y;
    Ok((out, info))
}

/// Map coefficients fitted on a standardized system (`k × q`) back to original
/// units. Returns the coefficients and the per-target intercepts.
pub fn destandardize_coeffs(coef: &Array2<f64>, info: &ScalingInfo) -> Result<(Array2<f64>, Vec<f64>)> {
    let q = info.z_mean.len();
    let k = info.y_mean.len();
    if coef.dim() != (k, q) || info.z_sd.len() != q {
        return Err(Error::Contract(format!(
            "coefficient shape {:?} does not match scaling ({k}, {q})",
            coef.dim()
        )));
    }
    let mut raw = coef.clone();
    for (j, mut col) in raw.columns_mut().into_iter().enumerate() {
        let sd = info.z_sd[j];
        col.mapv_inplace(|b| b / sd);
    }
    let z_mean = Array1::from(info.z_mean.clone());
    let intercepts = (0..k)
        .map(|i| info.y_mean[i] - raw.row(i).dot(&z_mean))
        .collect();
    Ok((raw, intercepts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{ColumnMeta, Role};
    use approx::assert_relative_eq;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, DATE_FORMAT).unwrap()
    }

    fn frame(dates: Vec<NaiveDate>, y: Vec<f64>, x: Option<Vec<f64>>) -> TimeSeriesFrame {
        let n = dates.len();
        let (meta, exog) = match x {
            Some(x) => (
                vec![ColumnMeta::new("Rainfall", "mm", Role::Exog)],
                Array2::from_shape_vec((n, 1), x).unwrap(),
            ),
            None => (vec![], Array2::zeros((n, 0))),
        };
        TimeSeriesFrame::new(
            dates,
            Resolution::Daily,
            vec![ColumnMeta::new("WTD", "cm", Role::Target)],
            Array2::from_shape_vec((n, 1), y).unwrap(),
            meta,
            exog,
        )
        .unwrap()
    }

    fn consecutive(n: usize) -> Vec<NaiveDate> {
        (0..n).map(|i| d("2016-05-01") + chrono::Duration::days(i as i64)).collect()
    }

    #[test]
    fn direct_indexing_first_row() {
        let f = frame(
            consecutive(6),
            vec![1., 2., 3., 4., 5., 6.],
            Some(vec![10., 20., 30., 40., 50., 60.]),
        );
        let dm = build_design(&f, &LagSpec::new(2, 1, LagMode::Positional).unwrap()).unwrap();
        assert_eq!(dm.n_rows(), 4);
        assert_eq!(dm.y[[0, 0]], 3.0);
        assert_eq!(dm.z.row(0).to_vec(), vec![2.0, 1.0, 20.0]);
        assert_eq!(dm.col_labels, vec!["Y1L1", "Y1L2", "Rainfall1"]);
    }

    #[test]
    fn constant_series_p1_s0() {
        let f = frame(consecutive(3), vec![7., 7., 7.], None);
        let dm = build_design(&f, &LagSpec::new(1, 0, LagMode::Calendar).unwrap()).unwrap();
        assert_eq!(dm.n_rows(), 2);
        assert!(dm.y.iter().all(|v| *v == 7.0));
        assert!(dm.z.iter().all(|v| *v == 7.0));
        assert_eq!(dm.n_cols(), 1);
    }

    #[test]
    fn gap_handling_calendar_vs_positional() {
        // 2016-05-02 missing from a five-date calendar.
        let dates = vec![
            d("2016-05-01"),
            d("2016-05-03"),
            d("2016-05-04"),
            d("2016-05-05"),
            d("2016-05-06"),
        ];
        let f = frame(dates, vec![1., 3., 4., 5., 6.], None);
        let cal = build_design(&f, &LagSpec::new(1, 0, LagMode::Calendar).unwrap()).unwrap();
        assert_eq!(
            cal.row_dates,
            vec![d("2016-05-04"), d("2016-05-05"), d("2016-05-06")]
        );
        let pos = build_design(&f, &LagSpec::new(1, 0, LagMode::Positional).unwrap()).unwrap();
        assert_eq!(pos.row_dates[0], d("2016-05-03"));
        assert_eq!(pos.z[[0, 0]], 1.0);
        assert_eq!(pos.lag_dates[[0, 0]], d("2016-05-01"));
    }

    #[test]
    fn modes_agree_without_gaps() {
        let f = frame(
            consecutive(20),
            (0..20).map(|i| (i as f64).sin()).collect(),
            Some((0..20).map(|i| (i as f64).cos()).collect()),
        );
        let a = build_design(&f, &LagSpec::new(3, 2, LagMode::Calendar).unwrap()).unwrap();
        let b = build_design(&f, &LagSpec::new(3, 2, LagMode::Positional).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_lookahead_and_labels_biject() {
        let f = frame(
            consecutive(15),
            (0..15).map(|i| i as f64).collect(),
            Some((0..15).map(|i| -(i as f64)).collect()),
        );
        let dm = build_design(&f, &LagSpec::default()).unwrap();
        assert!(dm.lookahead_violations().is_empty());
        assert_eq!(dm.n_cols(), 4 + 2);
        let unique: HashSet<_> = dm.col_labels.iter().collect();
        assert_eq!(unique.len(), dm.n_cols());
        assert_eq!(
            dm.col_labels,
            vec!["Y1L1", "Y1L2", "Y1L3", "Y1L4", "Rainfall1", "Rainfall2"]
        );
    }

    #[test]
    fn multi_exog_grouped_by_lag() {
        let names = vec!["Air_Temp_C".to_string(), "Rainfall".to_string()];
        let (_, labels) = column_layout(1, &names, 1, 2);
        assert_eq!(labels, vec!["Y1L1", "Air_Temp_C1", "Rainfall1", "Air_Temp_C2", "Rainfall2"]);
    }

    #[test]
    fn too_short_series() {
        let f = frame(consecutive(4), vec![1., 2., 3., 4.], None);
        let err = build_design(&f, &LagSpec::new(4, 0, LagMode::Calendar).unwrap()).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { required: 5, available: 4, .. }));
    }

    #[test]
    fn p_zero_rejected() {
        assert!(LagSpec::new(0, 1, LagMode::Calendar).is_err());
    }

    #[test]
    fn histories_round_trip_row() {
        let f = frame(
            consecutive(8),
            (0..8).map(|i| i as f64).collect(),
            Some((0..8).map(|i| 100.0 + i as f64).collect()),
        );
        let dm = build_design(&f, &LagSpec::new(3, 2, LagMode::Calendar).unwrap()).unwrap();
        let (ys, xs) = dm.histories(0);
        // Row 0 responds at index 3.
        assert_eq!(ys, vec![vec![2.0], vec![1.0], vec![0.0]]);
        assert_eq!(xs, vec![vec![102.0], vec![101.0]]);
    }

    fn two_row_design(z: Vec<f64>, y: Vec<f64>) -> DesignMatrix {
        let n = y.len();
        let f = frame(consecutive(n + 1), std::iter::once(0.0).chain(y.iter().copied()).collect(), None);
        let mut dm = build_design(&f, &LagSpec::new(1, 0, LagMode::Positional).unwrap()).unwrap();
        dm.z = Array2::from_shape_vec((n, 1), z).unwrap();
        dm
    }

    #[test]
    fn standardize_two_points() {
        let dm = two_row_design(vec![1.0, 3.0], vec![0.0, 1.0]);
        let (s, info) = standardize(&dm).unwrap();
        assert_relative_eq!(s.z[[0, 0]], -std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(s.z[[1, 0]], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_eq!(info.z_mean[0], 2.0);
        assert_relative_eq!(info.z_sd[0], 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(s.y.column(0).to_vec(), vec![-0.5, 0.5]);
    }

    #[test]
    fn standardize_idempotent() {
        let dm = two_row_design(vec![1.0, 4.0, 2.0, 7.0], vec![0.0; 4]);
        let (once, _) = standardize(&dm).unwrap();
        let (twice, _) = standardize(&once).unwrap();
        for (a, b) in once.z.iter().zip(twice.z.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_constant_column() {
        let dm = two_row_design(vec![5.0, 5.0, 5.0], vec![1.0, 2.0, 3.0]);
        let (s, info) = standardize(&dm).unwrap();
        assert!(s.z.iter().all(|v| *v == 0.0));
        assert!(info.constant[0]);
        assert_eq!(info.z_sd[0], 1.0);
    }

    #[test]
    fn destandardize_identity_and_sd_two() {
        let coef = Array2::from_shape_vec((1, 2), vec![0.3, -1.2]).unwrap();
        let (raw, nu) = destandardize_coeffs(&coef, &ScalingInfo::identity(2, 1)).unwrap();
        assert_eq!(raw, coef);
        assert_eq!(nu, vec![0.0]);

        let info = ScalingInfo {
            enabled: true,
            z_mean: vec![0.0],
            z_sd: vec![2.0],
            constant: vec![false],
            y_mean: vec![0.0],
        };
        let (raw, _) = destandardize_coeffs(&Array2::from_elem((1, 1), 0.8), &info).unwrap();
        assert_eq!(raw[[0, 0]], 0.4);
    }

    #[test]
    fn destandardize_dimension_mismatch() {
        let coef = Array2::zeros((1, 3));
        assert!(matches!(
            destandardize_coeffs(&coef, &ScalingInfo::identity(2, 1)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn destandardized_predictions_match_scaled() {
        let dm = two_row_design(vec![1.0, 4.0, 2.0, 7.0, -3.0], vec![2.0, 1.0, 0.5, 3.0, 9.0]);
        let (scaled, info) = standardize(&dm).unwrap();
        let coef = Array2::from_elem((1, 1), 1.7);
        let (raw, nu) = destandardize_coeffs(&coef, &info).unwrap();
        for r in 0..dm.n_rows() {
            let via_scaled = info.y_mean[0] + scaled.z[[r, 0]] * coef[[0, 0]];
            let via_raw = nu[0] + dm.z[[r, 0]] * raw[[0, 0]];
            assert!((via_scaled - via_raw).abs() <= 1e-10 * via_raw.abs().max(1.0));
        }
    }


    mod props {
        use super::*;
        use proptest::prelude::*;

        fn gappy(keep: &[bool]) -> TimeSeriesFrame {
            let dates: Vec<NaiveDate> = std::iter::once(&true)
                .chain(keep)
                .enumerate()
                .filter(|(_, k)| **k)
                .map(|(i, _)| d("2010-01-01") + chrono::Duration::days(i as i64))
                .collect();
            let n = dates.len();
            let y = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
            let x = (0..n).map(|i| (i as f64 * 1.3).cos()).collect();
            frame(dates, y, Some(x))
        }

        proptest! {
            #[test]
            fn regressors_predate_their_row(
                keep in prop::collection::vec(prop::bool::weighted(0.85), 30..120),
                p in 1usize..5,
                s in 0usize..4,
                positional: bool,
            ) {
                let mode = if positional { LagMode::Positional } else { LagMode::Calendar };
                if let Ok(dm) = build_design(&gappy(&keep), &LagSpec::new(p, s, mode).unwrap()) {
                    prop_assert!(dm.lookahead_violations().is_empty());
                    for r in 0..dm.n_rows() {
                        for c in 0..dm.n_cols() {
                            prop_assert!(dm.lag_dates[[r, c]] < dm.row_dates[r]);
                        }
                    }
                }
            }

            #[test]
            fn modes_agree_on_complete_frames(n in 20usize..80, p in 1usize..5, s in 0usize..4) {
                let f = gappy(&vec![true; n]);
                let cal = build_design(&f, &LagSpec::new(p, s, LagMode::Calendar).unwrap()).unwrap();
                let pos = build_design(&f, &LagSpec::new(p, s, LagMode::Positional).unwrap()).unwrap();
                prop_assert_eq!(cal, pos);
            }

            #[test]
            fn labels_biject_with_sources(k in 1usize..3, p in 1usize..6, s in 0usize..4, m in 0usize..5) {
                let names: Vec<String> = (0..m).map(|i| format!("v{i}_")).collect();
                let (sources, labels) = column_layout(k, &names, p, s);
                prop_assert_eq!(sources.len(), k * p + m * s);
                let unique: HashSet<&String> = labels.iter().collect();
                prop_assert_eq!(unique.len(), labels.len());
                let pairs: HashSet<String> = sources.iter().map(|c| format!("{:?}", c)).collect();
                prop_assert_eq!(pairs.len(), sources.len());
            }

            #[test]
            fn standardized_columns_have_zero_mean_unit_sd(z in prop::collection::vec(-1e3f64..1e3, 3..60)) {
                let n = z.len();
                let (scaled, info) = standardize(&two_row_design(z, vec![0.0; n])).unwrap();
                if !info.constant[0] {
                    let col = scaled.z.column(0);
                    let mean = col.sum() / n as f64;
                    let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
                    prop_assert!(mean.abs() < 1e-9);
                    prop_assert!((sd - 1.0).abs() < 1e-9);
                }
            }

            #[test]
            fn back_transformed_predictions_agree(
                z in prop::collection::vec(-50f64..50.0, 3..40),
                b in -5f64..5.0,
            ) {
                let n = z.len();
                let y: Vec<f64> = z.iter().map(|v| 0.3 * v - 2.0).collect();
                let dm = two_row_design(z, y);
                let (scaled, info) = standardize(&dm).unwrap();
                let (raw, nu) = destandardize_coeffs(&Array2::from_elem((1, 1), b), &info).unwrap();
                for r in 0..n {
                    let via_scaled = info.y_mean[0] + scaled.z[[r, 0]] * b;
                    let via_raw = nu[0] + dm.z[[r, 0]] * raw[[0, 0]];
                    prop_assert!((via_scaled - via_raw).abs() <= 1e-10 * via_raw.abs().max(1.0));
                }
            }
        }
    }
}
