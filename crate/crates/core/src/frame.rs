//! Date-indexed tables of target and exogenous series.
//!
//! Frames are immutable once built: every transformation returns a new frame.
//! All rows of a frame are complete; rows with any missing value are dropped
//! at load time.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Target,
    Exog,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub unit: String,
    pub role: Role,
}

impl ColumnMeta {
    pub fn new(name: impl Into<String>, unit: impl Into<String>, role: Role) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
            role,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    Daily,
    Monthly,
}

impl Resolution {
    /// Monthly when every date is the first of its month and consecutive dates
    /// are at least 28 days apart; daily otherwise.
    pub fn infer(dates: &[NaiveDate]) -> Self {
        if dates.len() >= 2
            && dates.iter().all(|d| d.day() == 1)
            && dates.windows(2).all(|w| (w[1] - w[0]).num_days() >= 28)
        {
            Resolution::Monthly
        } else {
            Resolution::Daily
        }
    }
}

/// Seasonal window applied to daily data.
///
/// Growing is Apr 1 – Oct 31 and dormant is Nov 1 – Mar 31, so the two
/// partition the calendar year (Feb 29 is dormant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeasonFilter {
    #[default]
    All,
    Growing,
    Dormant,
}

impl SeasonFilter {
    pub fn contains(self, date: NaiveDate) -> bool {
        let growing = (4..=10).contains(&date.month());
        match self {
            SeasonFilter::All => true,
            SeasonFilter::Growing => growing,
            SeasonFilter::Dormant => !growing,
        }
    }
}

impl std::str::FromStr for SeasonFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" | "daily" => Ok(SeasonFilter::All),
            "growing" => Ok(SeasonFilter::Growing),
            "dormant" => Ok(SeasonFilter::Dormant),
            other => Err(Error::Config(format!("unknown season {other:?}"))),
        }
    }
}

/// Which CSV columns play which role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub date_column: String,
    pub targets: Vec<String>,
    /// `None` uses every remaining column as an exogenous predictor.
    pub exog: Option<Vec<String>>,
    #[serde(default)]
    pub units: BTreeMap<String, String>,
}

impl Schema {
    pub fn new(date_column: impl Into<String>, targets: Vec<String>) -> Self {
        Self {
            date_column: date_column.into(),
            targets,
            exog: None,
            units: BTreeMap::new(),
        }
    }

    pub fn with_exog(mut self, exog: Vec<String>) -> Self {
        self.exog = Some(exog);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_dropped: usize,
    /// Data line numbers (1-based, header is line 1) of dropped rows.
    pub dropped_lines: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthCoverage {
    pub month: NaiveDate,
    pub rows: usize,
    pub days_in_month: u32,
}

impl MonthCoverage {
    pub fn fraction(&self) -> f64 {
        self.rows as f64 / self.days_in_month as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregationReport {
    pub months: Vec<MonthCoverage>,
}

/// Missing-value tokens: empty, `NA`, `NaN` (any case).
pub fn is_missing_token(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesFrame {
    dates: Vec<NaiveDate>,
    resolution: Resolution,
    target_meta: Vec<ColumnMeta>,
    exog_meta: Vec<ColumnMeta>,
    targets: Array2<f64>,
    exog: Array2<f64>,
}

impl TimeSeriesFrame {
    pub fn new(
        dates: Vec<NaiveDate>,
        resolution: Resolution,
        target_meta: Vec<ColumnMeta>,
        targets: Array2<f64>,
        exog_meta: Vec<ColumnMeta>,
        exog: Array2<f64>,
    ) -> Result<Self> {
        let n = dates.len();
        if target_meta.is_empty() {
            return Err(Error::Contract("frame needs at least one target".into()));
        }
        if targets.dim() != (n, target_meta.len()) || exog.dim() != (n, exog_meta.len()) {
            return Err(Error::Contract(format!(
                "frame shape mismatch: {n} dates, targets {:?}, exog {:?}",
                targets.dim(),
                exog.dim()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
            return Err(if w[1] == w[0] {
                Error::DuplicateDate(w[0].to_string())
            } else {
                Error::Contract("frame dates must be strictly increasing".into())
            });
        }
        if targets.iter().chain(exog.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("frame values".into()));
        }
        let mut seen = HashSet::new();
        for meta in target_meta.iter().chain(&exog_meta) {
            if !seen.insert(meta.name.as_str()) {
                return Err(Error::Contract(format!("duplicate column name {:?}", meta.name)));
            }
        }
        let mut target_meta = target_meta;
        let mut exog_meta = exog_meta;
        target_meta.iter_mut().for_each(|c| c.role = Role::Target);
        exog_meta.iter_mut().for_each(|c| c.role = Role::Exog);
        Ok(Self {
            dates,
            resolution,
            target_meta,
            exog_meta,
            targets,
            exog,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn targets(&self) -> &Array2<f64> {
        &self.targets
    }

    pub fn exog(&self) -> &Array2<f64> {
        &self.exog
    }

    pub fn target_meta(&self) -> &[ColumnMeta] {
        &self.target_meta
    }

    pub fn exog_meta(&self) -> &[ColumnMeta] {
        &self.exog_meta
    }

    pub fn target_names(&self) -> Vec<String> {
        self.target_meta.iter().map(|c| c.name.clone()).collect()
    }

    pub fn exog_names(&self) -> Vec<String> {
        self.exog_meta.iter().map(|c| c.name.clone()).collect()
    }

    /// Values of a column by name, whatever its role.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        if let Some(i) = self.target_meta.iter().position(|c| c.name == name) {
            return Some(self.targets.column(i).to_vec());
        }
        self.exog_meta
            .iter()
            .position(|c| c.name == name)
            .map(|i| self.exog.column(i).to_vec())
    }

    fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            dates: rows.iter().map(|&r| self.dates[r]).collect(),
            resolution: self.resolution,
            target_meta: self.target_meta.clone(),
            exog_meta: self.exog_meta.clone(),
            targets: self.targets.select(Axis(0), rows),
            exog: self.exog.select(Axis(0), rows),
        }
    }

    /// Keep the rows whose date lies in the seasonal window.
    pub fn filter_season(&self, filter: SeasonFilter) -> Result<Self> {
        if self.resolution != Resolution::Daily {
            return Err(Error::UnsupportedResolution);
        }
        let rows: Vec<usize> = (0..self.len())
            .filter(|&i| filter.contains(self.dates[i]))
            .collect();
        Ok(self.select_rows(&rows))
    }

    /// Collapse daily rows to one row per calendar month: `sum_columns` are
    /// summed, everything else averaged. Months with no rows do not appear.
    pub fn aggregate_monthly(&self, sum_columns: &[String]) -> Result<(Self, AggregationReport)> {
        if self.resolution != Resolution::Daily {
            return Err(Error::UnsupportedResolution);
        }
        for name in sum_columns {
            if self.column_index(name).is_none() {
                return Err(Error::NotFound(name.clone()));
            }
        }
        let summed: HashSet<&str> = sum_columns.iter().map(String::as_str).collect();

        let mut groups: Vec<(NaiveDate, Vec<usize>)> = Vec::new();
        for (i, d) in self.dates.iter().enumerate() {
            let month = first_of_month(*d);
            match groups.last_mut() {
                Some((m, rows)) if *m == month => rows.push(i),
                _ => groups.push((month, vec![i])),
            }
        }

        let reduce = |data: &Array2<f64>, meta: &[ColumnMeta]| {
            let mut out = Array2::zeros((groups.len(), meta.len()));
            for (g, (_, rows)) in groups.iter().enumerate() {
                for (c, col) in meta.iter().enumerate() {
                    let total: f64 = rows.iter().map(|&r| data[[r, c]]).sum();
                    out[[g, c]] = if summed.contains(col.name.as_str()) {
                        total
                    } else {
                        total / rows.len() as f64
                    };
                }
            }
            out
        };

        let report = AggregationReport {
            months: groups
                .iter()
                .map(|(m, rows)| MonthCoverage {
                    month: *m,
                    rows: rows.len(),
                    days_in_month: days_in_month(*m),
                })
                .collect(),
        };
        let frame = Self {
            dates: groups.iter().map(|(m, _)| *m).collect(),
            resolution: Resolution::Monthly,
            target_meta: self.target_meta.clone(),
            exog_meta: self.exog_meta.clone(),
            targets: reduce(&self.targets, &self.target_meta),
            exog: reduce(&self.exog, &self.exog_meta),
        };
        Ok((frame, report))
    }

    /// Remove exogenous columns; targets cannot be dropped.
    pub fn drop_columns(&self, names: &[String]) -> Result<Self> {
        for name in names {
            if self.target_meta.iter().any(|c| &c.name == name) {
                return Err(Error::InvalidOperation(format!(
                    "cannot drop target column {name:?}"
                )));
            }
            if !self.exog_meta.iter().any(|c| &c.name == name) {
                return Err(Error::NotFound(name.clone()));
            }
        }
        let keep: Vec<usize> = (0..self.exog_meta.len())
            .filter(|&i| !names.contains(&self.exog_meta[i].name))
            .collect();
        Ok(Self {
            dates: self.dates.clone(),
            resolution: self.resolution,
            target_meta: self.target_meta.clone(),
            exog_meta: keep.iter().map(|&i| self.exog_meta[i].clone()).collect(),
            targets: self.targets.clone(),
            exog: self.exog.select(Axis(1), &keep),
        })
    }

    fn column_index(&self, name: &str) -> Option<(Role, usize)> {
        self.target_meta
            .iter()
            .position(|c| c.name == name)
            .map(|i| (Role::Target, i))
            .or_else(|| {
                self.exog_meta
                    .iter()
                    .position(|c| c.name == name)
                    .map(|i| (Role::Exog, i))
            })
    }

    pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<(Self, LoadReport)> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, schema)
    }

    /// Parse CSV text. Lines starting with `#` are ignored, so provenance
    /// headers written by [`TimeSeriesFrame::write_csv`] round-trip.
    pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<(Self, LoadReport)> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::NotFound(name.to_string()))
        };
        let date_idx = find(&schema.date_column)?;
        if schema.targets.is_empty() {
            return Err(Error::Config("at least one target column is required".into()));
        }
        let target_idx = schema
            .targets
            .iter()
            .map(|t| find(t))
            .collect::<Result<Vec<_>>>()?;
        let exog_names: Vec<String> = match &schema.exog {
            Some(list) => list.clone(),
            None => headers
                .iter()
                .filter(|h| **h != schema.date_column && !schema.targets.contains(h))
                .cloned()
                .collect(),
        };
        let exog_idx = exog_names
            .iter()
            .map(|t| find(t))
            .collect::<Result<Vec<_>>>()?;

        let mut report = LoadReport::default();
        let mut rows: Vec<(NaiveDate, Vec<f64>, Vec<f64>)> = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(i as u64 + 2);
            report.rows_read += 1;
            let date_cell = record.get(date_idx).unwrap_or("");
            // Validate every used cell before deciding to drop the row, so a
            // malformed value is never hidden by a missing one elsewhere.
            let ys = parse_cells_all(&record, &target_idx, &headers, line)?;
            let xs = parse_cells_all(&record, &exog_idx, &headers, line)?;
            if is_missing_token(date_cell) || ys.is_none() || xs.is_none() {
                report.rows_dropped += 1;
                report.dropped_lines.push(line);
                continue;
            }
            let date = NaiveDate::parse_from_str(date_cell.trim(), DATE_FORMAT).map_err(|_| {
                Error::InvalidDate {
                    line,
                    value: date_cell.to_string(),
                }
            })?;
            rows.push((date, ys.unwrap_or_default(), xs.unwrap_or_default()));
        }
        if rows.is_empty() {
            return Err(Error::EmptyData);
        }
        rows.sort_by_key(|r| r.0);
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateDate(w[0].0.to_string()));
        }

        let n = rows.len();
        let k = target_idx.len();
        let m = exog_idx.len();
        let mut targets = Array2::zeros((n, k));
        let mut exog = Array2::zeros((n, m));
        for (r, (_, ys, xs)) in rows.iter().enumerate() {
            for (c, v) in ys.iter().enumerate() {
                targets[[r, c]] = *v;
            }
            for (c, v) in xs.iter().enumerate() {
                exog[[r, c]] = *v;
            }
        }
        let unit = |name: &str| schema.units.get(name).cloned().unwrap_or_default();
        let dates: Vec<NaiveDate> = rows.iter().map(|r| r.0).collect();
        let resolution = Resolution::infer(&dates);
        let frame = Self::new(
            dates,
            resolution,
            schema
                .targets
                .iter()
                .map(|t| ColumnMeta::new(t.clone(), unit(t), Role::Target))
                .collect(),
            targets,
            exog_names
                .iter()
                .map(|t| ColumnMeta::new(t.clone(), unit(t), Role::Exog))
                .collect(),
            exog,
        )?;
        if report.rows_dropped > 0 {
            log::info!("{} row(s) dropped for missing values", report.rows_dropped);
        }
        Ok((frame, report))
    }

    /// Write `date_column, targets..., exog...` with an optional `#` comment
    /// line first.
    pub fn write_csv<W: Write>(&self, writer: W, date_column: &str, comment: Option<&str>) -> Result<()> {
        let mut writer = writer;
        if let Some(c) = comment {
            writeln!(writer, "# {c}").map_err(|e| Error::io("<frame csv>", e))?;
        }
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![date_column.to_string()];
        header.extend(self.target_names());
        header.extend(self.exog_names());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![self.dates[i].format(DATE_FORMAT).to_string()];
            rec.extend(self.targets.row(i).iter().map(|v| v.to_string()));
            rec.extend(self.exog.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<frame csv>", e))?;
        Ok(())
    }
}

fn parse_cells_all(
    record: &csv::StringRecord,
    idx: &[usize],
    headers: &[String],
    line: u64,
) -> Result<Option<Vec<f64>>> {
    let mut out = Vec::with_capacity(idx.len());
    let mut missing = false;
    for &c in idx {
        let cell = record.get(c).unwrap_or("");
        if is_missing_token(cell) {
            missing = true;
            continue;
        }
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ => {
                return Err(Error::NonNumeric {
                    line,
                    column: headers[c].clone(),
                    value: cell.to_string(),
                })
            }
        }
    }
    Ok((!missing).then_some(out))
}

pub fn first_of_month(d: NaiveDate) -> NaiveDate {
    NaiveDate::from_ymd_opt(d.year(), d.month(), 1).expect("valid first of month")
}

fn days_in_month(first: NaiveDate) -> u32 {
    let next = first
        .checked_add_months(chrono::Months::new(1))
        .expect("date in range");
    (next - first).num_days() as u32
}

/// Names that appear in exactly one of the two sets, for compatibility messages.
pub(crate) fn set_difference(a: &[String], b: &[String]) -> Vec<String> {
    let b: BTreeSet<&String> = b.iter().collect();
    a.iter().filter(|x| !b.contains(x)).cloned().collect()
}
