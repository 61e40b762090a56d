//! Run configuration shared by every CLI command, and the provenance line
//! embedded in every output file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::{LagMode, LagSpec};
use crate::error::{Error, Result};
use crate::frame::{Schema, SeasonFilter};
use crate::pipeline::ModelSpec;
use crate::select::{linear_grid, log_grid, RefitPolicy, SelectOptions};
use crate::solver::FitOptions;

/// Prefix of the provenance comment line.
pub const PROVENANCE_TAG: &str = "varx-run";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    Log,
    Linear,
}

/// `min:max:count:log|linear`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: GridScale,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            min: 10.0,
            max: 500.0,
            count: 24,
            scale: GridScale::Log,
        }
    }
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self.scale {
            GridScale::Log => log_grid(self.min, self.max, self.count),
            GridScale::Linear => linear_grid(self.min, self.max, self.count),
        }
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad lambda grid {s:?}; expected min:max:count[:log|linear]"));
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(bad());
        }
        let min = parts[0].parse().map_err(|_| bad())?;
        let max = parts[1].parse().map_err(|_| bad())?;
        let count = parts[2].parse().map_err(|_| bad())?;
        let scale = match parts.get(3).map(|p| p.to_ascii_lowercase()) {
            None => GridScale::Log,
            Some(p) if p == "log" => GridScale::Log,
            Some(p) if p == "linear" => GridScale::Linear,
            Some(_) => return Err(bad()),
        };
        Ok(Self { min, max, count, scale })
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scale = match self.scale {
            GridScale::Log => "log",
            GridScale::Linear => "linear",
        };
        write!(f, "{}:{}:{}:{}", self.min, self.max, self.count, scale)
    }
}

impl TryFrom<String> for GridSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GridSpec> for String {
    fn from(g: GridSpec) -> String {
        g.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    None,
    Monthly,
}

impl FromStr for Aggregation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "daily" => Ok(Aggregation::None),
            "monthly" => Ok(Aggregation::Monthly),
            _ => Err(Error::Config(format!("unknown aggregation {s:?}"))),
        }
    }
}

/// Inclusive order range, written `lo:hi` or as a comma list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct OrderRange(pub Vec<usize>);

impl FromStr for OrderRange {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad order range {s:?}; expected lo:hi or a,b,c"));
        let values: Vec<usize> = if let Some((lo, hi)) = s.split_once(':') {
            let lo: usize = lo.trim().parse().map_err(|_| bad())?;
            let hi: usize = hi.trim().parse().map_err(|_| bad())?;
            (lo..=hi).collect()
        } else {
            s.split(',')
                .map(|v| v.trim().parse().map_err(|_| bad()))
                .collect::<Result<_>>()?
        };
        if values.is_empty() {
            return Err(bad());
        }
        Ok(Self(values))
    }
}

impl fmt::Display for OrderRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl TryFrom<String> for OrderRange {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<OrderRange> for String {
    fn from(r: OrderRange) -> String {
        r.to_string()
    }
}

mod refit_string {
    use super::RefitPolicy;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &RefitPolicy, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RefitPolicy, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Parameters of the `simulate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub n: usize,
    /// Target lag coefficients, lag 1 first.
    pub phi: Vec<f64>,
    /// Exogenous coefficients per lag, lag 1 first.
    pub beta: Vec<Vec<f64>>,
    pub sigma: f64,
    /// Autocorrelation of the exogenous series; 0 gives i.i.d. draws.
    pub exog_rho: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            phi: vec![0.6],
            beta: vec![vec![1.0, 0.0]],
            sigma: 1.0,
            exog_rho: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub date_column: String,
    pub targets: Vec<String>,
    /// `None` uses every non-target column.
    pub exog: Option<Vec<String>>,
    pub p: usize,
    pub s: usize,
    pub lag_mode: LagMode,
    pub alpha: f64,
    pub lambda_grid: GridSpec,
    pub season: SeasonFilter,
    pub aggregation: Aggregation,
    pub sum_columns: Vec<String>,
    pub drop: Vec<String>,
    /// Exogenous columns removed in the reduced run of `ablate`.
    pub ablate: Vec<String>,
    #[serde(with = "refit_string")]
    pub refit: RefitPolicy,
    pub ci_multiplier: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub standardize: bool,
    pub p_range: OrderRange,
    pub s_range: OrderRange,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub simulation: SimulationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fit = FitOptions::default();
        let spec = ModelSpec::default();
        Self {
            input: None,
            date_column: "Date".into(),
            targets: vec!["WTD".into()],
            exog: None,
            p: spec.lag.p,
            s: spec.lag.s,
            lag_mode: spec.lag.mode,
            alpha: spec.alpha,
            lambda_grid: GridSpec::default(),
            season: SeasonFilter::All,
            aggregation: Aggregation::None,
            sum_columns: Vec::new(),
            drop: Vec::new(),
            ablate: Vec::new(),
            refit: RefitPolicy::Fixed,
            ci_multiplier: spec.ci_multiplier,
            tol: fit.tol,
            max_iter: fit.max_iter,
            standardize: fit.standardize,
            p_range: OrderRange((1..=6).collect()),
            s_range: OrderRange((0..=3).collect()),
            output_dir: PathBuf::from("varx-out"),
            seed: 0,
            simulation: SimulationConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn schema(&self) -> Schema {
        Schema {
            date_column: self.date_column.clone(),
            targets: self.targets.clone(),
            exog: self.exog.clone(),
            units: Default::default(),
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let spec = ModelSpec {
            lag: LagSpec::new(self.p, self.s, self.lag_mode)?,
            alpha: self.alpha,
            grid: self.lambda_grid.values()?,
            refit: self.refit,
            fit: FitOptions {
                tol: self.tol,
                max_iter: self.max_iter,
                standardize: self.standardize,
                record_trace: false,
            },
            ci_multiplier: self.ci_multiplier,
            season: self.season,
            monthly: self.aggregation == Aggregation::Monthly,
            sum_columns: self.sum_columns.clone(),
            drop: self.drop.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn select_options(&self) -> Result<SelectOptions> {
        let spec = self.model_spec()?;
        Ok(SelectOptions {
            alpha: spec.alpha,
            grid: spec.grid,
            mode: self.lag_mode,
            refit: spec.refit,
            fit: spec.fit,
        })
    }

    /// Checks that need no I/O.
    pub fn validate(&self) -> Result<()> {
        self.model_spec()?;
        if self.targets.is_empty() {
            return Err(Error::Config("at least one target column is required".into()));
        }
        if self.p_range.0.contains(&0) {
            return Err(Error::Config("p range must not include 0".into()));
        }
        if self.aggregation == Aggregation::None && !self.sum_columns.is_empty() {
            return Err(Error::Config("sum columns given without monthly aggregation".into()));
        }
        Ok(())
    }

    pub fn require_input(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| Error::Config("no input file given".into()))
    }

    /// `varx-run {"version": ..., "config": {...}}`, without the comment marker.
    pub fn provenance(&self) -> String {
        let doc = Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.clone(),
        };
        format!(
            "{PROVENANCE_TAG} {}",
            serde_json::to_string(&doc).expect("config serializes")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config: RunConfig,
}

/// Read the provenance comment from the first line of an output file.
pub fn parse_provenance(text: &str) -> Result<Provenance> {
    let first = text.lines().next().unwrap_or_default();
    let body = first
        .strip_prefix('#')
        .map(str::trim_start)
        .and_then(|l| l.strip_prefix(PROVENANCE_TAG))
        .ok_or_else(|| Error::Input("no provenance line found".into()))?;
    Ok(serde_json::from_str(body.trim())?)
}
