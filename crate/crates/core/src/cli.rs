//! Command-line interface: argument parsing, config resolution and the
//! artifacts each command writes.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{parse_provenance, Aggregation, GridSpec, OrderRange, RunConfig};
use crate::design::{build_design, DesignMatrix, LagMode};
use crate::error::{Error, Result};
use crate::forecast::{coefficient_report, write_forecast_csv, RegressionLine};
use crate::frame::{SeasonFilter, TimeSeriesFrame};
use crate::metrics::MetricsReport;
use crate::model_io::{check_compatible, ModelDocument};
use crate::pipeline::{ablation_run, evaluate_model, preprocess, select_and_fit, ModelSpec};
use crate::select::{select_order, RefitPolicy, SplitPlan};
use crate::solver::FittedModel;
use crate::synth::{simulate, ExogGenerator, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "varx", version, about = "Sparse elastic-net VARX forecasting")]
pub struct Cli {
    /// Repeat for more log output on standard error.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select lambda and fit; writes model.json, lambda_path.csv, coefficients.csv.
    Fit(RunArgs),
    /// Score the test segment; fits first unless --model is given.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Write test-segment one-step forecasts with bands.
    Forecast {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Compare the full model with one refit without some predictors.
    Ablate(RunArgs),
    /// Scan (p, s) by BIC; writes order_scan.csv.
    SelectOrder(RunArgs),
    /// Generate a synthetic dataset with known coefficients.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Summarize a run directory on standard output.
    Report {
        /// Run directory written by another command.
        dir: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub date_column: Option<String>,
    /// Target column(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<String>>,
    /// Exogenous columns, comma separated; default is every other column.
    #[arg(long, value_delimiter = ',')]
    pub exog: Option<Vec<String>>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    /// calendar | positional
    #[arg(long)]
    pub lag_mode: Option<LagMode>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// min:max:count[:log|linear]
    #[arg(long)]
    pub lambda_grid: Option<GridSpec>,
    /// all | growing | dormant
    #[arg(long)]
    pub season: Option<SeasonFilter>,
    /// none | monthly
    #[arg(long)]
    pub aggregation: Option<Aggregation>,
    /// Columns summed by monthly aggregation, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sum_columns: Option<Vec<String>>,
    /// Exogenous columns removed before fitting, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub drop: Option<Vec<String>>,
    /// Columns removed in the reduced run of `ablate`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ablate: Option<Vec<String>>,
    /// fixed | expanding:<m>
    #[arg(long)]
    pub refit: Option<RefitPolicy>,
    #[arg(long)]
    pub ci_multiplier: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Fit on unscaled regressors.
    #[arg(long)]
    pub no_standardize: bool,
    /// lo:hi or a,b,c
    #[arg(long)]
    pub p_range: Option<OrderRange>,
    /// lo:hi or a,b,c
    #[arg(long)]
    pub s_range: Option<OrderRange>,
    #[arg(short, long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Target lag coefficients, comma separated, lag 1 first.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub phi: Option<Vec<f64>>,
    /// Exogenous coefficients: lags separated by ';', series by ','.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub exog_rho: Option<f64>,
}

impl RunArgs {
    /// Config file (or defaults) with flag overrides applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { c.$field = v.clone(); })*
            };
        }
        set!(
            date_column, targets, p, s, lag_mode, alpha, lambda_grid, season, aggregation, sum_columns,
            drop, ablate, refit, ci_multiplier, tol, max_iter, p_range, s_range, output_dir, seed
        );
        if self.input.is_some() {
            c.input = self.input.clone();
        }
        if self.exog.is_some() {
            c.exog = self.exog.clone();
        }
        if self.no_standardize {
            c.standardize = false;
        }
        Ok(c)
    }
}

impl SimArgs {
    fn apply(&self, c: &mut RunConfig) -> Result<()> {
        let sim = &mut c.simulation;
        if let Some(n) = self.n {
            sim.n = n;
        }
        if let Some(phi) = &self.phi {
            sim.phi = phi.clone();
        }
        if let Some(beta) = &self.beta {
            sim.beta = parse_beta(beta)?;
        }
        if let Some(sigma) = self.sigma {
            sim.sigma = sigma;
        }
        if let Some(rho) = self.exog_rho {
            sim.exog_rho = rho;
        }
        Ok(())
    }
}

fn parse_beta(text: &str) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .filter(|r| !r.trim().is_empty())
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad coefficient {v:?} in --beta")))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    if rows.windows(2).any(|w| w[0].len() != w[1].len()) {
        return Err(Error::Config("every --beta lag needs the same number of series".into()));
    }
    Ok(rows)
}

/// A failed command: which stage failed and why.
#[derive(Debug)]
pub struct Failure {
    pub stage: &'static str,
    pub error: Error,
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        self.error.category().exit_code()
    }
}

trait Stage<T> {
    fn at(self, stage: &'static str) -> std::result::Result<T, Failure>;
}

impl<T> Stage<T> for Result<T> {
    fn at(self, stage: &'static str) -> std::result::Result<T, Failure> {
        self.map_err(|error| Failure { stage, error })
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parse-free entry point: run a command and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("varx: {} failed: {}", f.stage, f.error);
            f.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Outcome {
    match command {
        Command::Fit(run) => cmd_fit(&run.resolve().at("config")?),
        Command::Evaluate { run, model } => cmd_evaluate(&run.resolve().at("config")?, model.as_deref(), true),
        Command::Forecast { run, model } => cmd_evaluate(&run.resolve().at("config")?, model.as_deref(), false),
        Command::Ablate(run) => cmd_ablate(&run.resolve().at("config")?),
        Command::SelectOrder(run) => cmd_select_order(&run.resolve().at("config")?),
        Command::Simulate { run, sim } => {
            let mut cfg = run.resolve().at("config")?;
            sim.apply(&mut cfg).at("config")?;
            cmd_simulate(&cfg)
        }
        Command::Report { dir } => cmd_report(&dir),
    }
}

/// Artifact writer for one run directory; every file carries the provenance line.
struct RunDir {
    dir: PathBuf,
    provenance: String,
    config: RunConfig,
}

impl RunDir {
    fn create(cfg: &RunConfig) -> Result<Self> {
        fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
        Ok(Self {
            dir: cfg.output_dir.clone(),
            provenance: cfg.provenance(),
            config: cfg.clone(),
        })
    }

    fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(path, e))
    }

    fn csv(&self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = format!("# {}\n", self.provenance).into_bytes();
        body(&mut buf)?;
        self.write_bytes(name, &buf)
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    fn config(&self) -> Result<()> {
        self.json("config.json", &self.config)
    }

    fn model(&self, model: &FittedModel) -> Result<()> {
        let mut doc = ModelDocument::from_model(model);
        doc.config = Some(serde_json::to_value(&self.config)?);
        self.json("model.json", &doc)
    }
}

#[derive(Serialize)]
struct Provenanced<'a, T: Serialize> {
    provenance: crate::config::Provenance,
    #[serde(flatten)]
    body: &'a T,
}

fn with_provenance<'a, T: Serialize>(cfg: &RunConfig, body: &'a T) -> Provenanced<'a, T> {
    Provenanced {
        provenance: crate::config::Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
        },
        body,
    }
}

fn load_frame(cfg: &RunConfig) -> Result<TimeSeriesFrame> {
    let path = cfg.require_input()?;
    let (frame, report) = TimeSeriesFrame::load_csv(path, &cfg.schema())?;
    log::info!(
        "{}: read {} rows, dropped {} with missing values",
        path.display(),
        report.rows_read,
        report.rows_dropped
    );
    Ok(frame)
}

/// Validate, load and build the design for a config.
fn prepare(cfg: &RunConfig) -> std::result::Result<(ModelSpec, DesignMatrix), Failure> {
    cfg.validate().at("config")?;
    let spec = cfg.model_spec().at("config")?;
    cfg.require_input().at("config")?;
    let frame = load_frame(cfg).at("load")?;
    let prepared = preprocess(&frame, &spec).at("preprocess")?;
    if let Some(agg) = &prepared.aggregation {
        for m in agg.months.iter().filter(|m| m.fraction() < 1.0) {
            log::info!("month {} covered {}/{} days", m.month, m.rows, m.days_in_month);
        }
    }
    let design = build_design(&prepared.frame, &spec.lag).at("design")?;
    Ok((spec, design))
}

fn cmd_fit(cfg: &RunConfig) -> Outcome {
    let (spec, design) = prepare(cfg)?;
    let (_, path, model) = select_and_fit(&design, &spec).at("select")?;
    let out = RunDir::create(cfg).at("write")?;
    out.config().at("write")?;
    out.model(&model).at("write")?;
    out.csv("lambda_path.csv", |b| path.write_csv(b)).at("write")?;
    out.csv("coefficients.csv", |b| coefficient_report(&model).write_csv(b))
        .at("write")?;
    Ok(())
}

fn cmd_evaluate(cfg: &RunConfig, model_path: Option<&Path>, full: bool) -> Outcome {
    let (spec, design) = prepare(cfg)?;
    let out = RunDir::create(cfg).at("write")?;
    let (split, model) = match model_path {
        Some(path) => {
            let model = ModelDocument::load(path)
                .and_then(ModelDocument::into_model)
                .at("load model")?;
            check_compatible(&model, &design).at("load model")?;
            (SplitPlan::new(design.n_rows()).at("split")?, model)
        }
        None => {
            let (split, lambda_path, model) = select_and_fit(&design, &spec).at("select")?;
            out.model(&model).at("write")?;
            out.csv("lambda_path.csv", |b| lambda_path.write_csv(b)).at("write")?;
            out.csv("coefficients.csv", |b| coefficient_report(&model).write_csv(b))
                .at("write")?;
            (split, model)
        }
    };
    let (forecasts, metrics, regression) =
        evaluate_model(&model, &design, &split, spec.ci_multiplier).at("evaluate")?;
    out.config().at("write")?;
    out.csv("forecast.csv", |b| write_forecast_csv(&forecasts, b)).at("write")?;
    if full {
        out.csv("metrics.csv", |b| write_metrics(&model.target_names, &metrics, b))
            .at("write")?;
        let lines: Vec<RegressionRecord> = model
            .target_names
            .iter()
            .zip(&regression)
            .map(|(t, l)| RegressionRecord {
                target: t.clone(),
                line: *l,
            })
            .collect();
        out.json("regression_line.json", &with_provenance(cfg, &RegressionFile { lines }))
            .at("write")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RegressionRecord {
    target: String,
    /// `null` when predictions were constant.
    line: Option<RegressionLine>,
}

#[derive(Serialize)]
struct RegressionFile {
    lines: Vec<RegressionRecord>,
}

/// `metric,value,flag`, with a leading `target` column for several targets.
fn write_metrics(targets: &[String], reports: &[MetricsReport], buf: &mut Vec<u8>) -> Result<()> {
    if reports.len() == 1 {
        return reports[0].write_csv(buf);
    }
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(["target", "metric", "value", "flag"])?;
    for (t, r) in targets.iter().zip(reports) {
        for e in &r.entries {
            w.write_record([
                t.clone(),
                e.metric.clone(),
                crate::metrics::format_value(e.value),
                e.flag.as_str().to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<metrics csv>", e))?;
    Ok(())
}

fn cmd_ablate(cfg: &RunConfig) -> Outcome {
    cfg.validate().at("config")?;
    let spec = cfg.model_spec().at("config")?;
    cfg.require_input().at("config")?;
    let frame = load_frame(cfg).at("load")?;
    let report = ablation_run(&frame, &spec, &cfg.ablate).at("ablate")?;
    let out = RunDir::create(cfg).at("write")?;
    let targets = &report.full.model.target_names;
    out.config().at("write")?;
    out.csv("full_metrics.csv", |b| write_metrics(targets, &report.full.metrics, b))
        .at("write")?;
    out.csv("reduced_metrics.csv", |b| write_metrics(targets, &report.reduced.metrics, b))
        .at("write")?;
    out.csv("delta.csv", |b| report.delta.write_csv(b)).at("write")?;
    Ok(())
}

fn cmd_select_order(cfg: &RunConfig) -> Outcome {
    cfg.validate().at("config")?;
    let spec = cfg.model_spec().at("config")?;
    let opts = cfg.select_options().at("config")?;
    cfg.require_input().at("config")?;
    let frame = load_frame(cfg).at("load")?;
    let prepared = preprocess(&frame, &spec).at("preprocess")?;
    let scan = select_order(&prepared.frame, &cfg.p_range.0, &cfg.s_range.0, &opts).at("select order")?;
    let out = RunDir::create(cfg).at("write")?;
    out.config().at("write")?;
    out.csv("order_scan.csv", |b| scan.write_csv(b)).at("write")?;
    let (p, s) = scan.chosen_order();
    println!("chosen order p={p} s={s}");
    Ok(())
}

#[derive(Serialize)]
struct TruthFile<'a> {
    phi: &'a [f64],
    beta: &'a [Vec<f64>],
    sigma: f64,
    spectral_radius: f64,
}

fn cmd_simulate(cfg: &RunConfig) -> Outcome {
    let sim = &cfg.simulation;
    if cfg.targets.len() != 1 {
        return Err(Error::Config("simulate writes exactly one target".into())).at("config");
    }
    let mut spec = SynthSpec::univariate(sim.n, &sim.phi, &sim.beta, sim.sigma, cfg.seed);
    if sim.exog_rho != 0.0 {
        spec.exog = ExogGenerator::Ar1 { rho: sim.exog_rho };
    }
    let (frame, truth) = simulate(&spec).at("simulate")?;
    let mut target_meta = frame.target_meta().to_vec();
    target_meta[0].name = cfg.targets[0].clone();
    let frame = TimeSeriesFrame::new(
        frame.dates().to_vec(),
        frame.resolution(),
        target_meta,
        frame.targets().clone(),
        frame.exog_meta().to_vec(),
        frame.exog().clone(),
    )
    .at("simulate")?;
    let out = RunDir::create(cfg).at("write")?;
    out.config().at("write")?;
    let mut buf = Vec::new();
    frame
        .write_csv(&mut buf, &cfg.date_column, Some(&out.provenance))
        .at("write")?;
    out.write_bytes("synthetic.csv", &buf).at("write")?;
    let body = TruthFile {
        phi: &sim.phi,
        beta: &sim.beta,
        sigma: truth.sigma,
        spectral_radius: truth.spectral_radius,
    };
    out.json("truth.json", &with_provenance(cfg, &body)).at("write")?;
    Ok(())
}

fn cmd_report(dir: &Path) -> Outcome {
    let read = |name: &str| -> Option<String> { fs::read_to_string(dir.join(name)).ok() };
    let mut found = false;
    if let Some(text) = read("config.json") {
        let cfg: RunConfig = serde_json::from_str(&text).map_err(Error::from).at("report")?;
        println!("input: {}", cfg.input.as_deref().map_or("-".into(), |p| p.display().to_string()));
        println!("p={} s={} alpha={} grid={} refit={}", cfg.p, cfg.s, cfg.alpha, cfg.lambda_grid, cfg.refit);
        found = true;
    }
    let tables = [
        ("lambda_path.csv", "lambda path"),
        ("coefficients.csv", "coefficients"),
        ("metrics.csv", "metrics"),
        ("order_scan.csv", "order scan"),
        ("delta.csv", "ablation delta"),
    ];
    for (file, title) in tables {
        let Some(text) = read(file) else { continue };
        parse_provenance(&text).at("report")?;
        found = true;
        println!("\n{title}");
        let rows: Vec<Vec<String>> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(str::to_string).collect())
            .filter(|r: &Vec<String>| {
                file != "coefficients.csv" || r.get(2).is_some_and(|v| v != "0.0")
            })
            .collect();
        print_table(&rows);
    }
    if !found {
        return Err(Error::NotFound(format!("no run artifacts in {}", dir.display()))).at("report");
    }
    Ok(())
}

fn print_table(rows: &[Vec<String>]) {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, v)| format!("{v:<w$}", w = widths[c]))
            .collect();
        println!("  {}", cells.join("  ").trim_end());
    }
}
