//! Goodness-of-fit statistics for simulated vs. observed series.
//!
//! Standard deviations are sample (n − 1) statistics throughout. Metrics whose
//! denominators vanish or whose preconditions fail are reported as undefined
//! rather than as a silent number.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Report row order.
pub const METRIC_NAMES: [&str; 27] = [
    "ME", "MAE", "MSE", "RMSE", "ubRMSE", "NRMSE%", "PBIAS%", "RSR", "rSD", "NSE", "NNSE", "mNSE",
    "rNSE", "wNSE", "d", "dr", "md", "rd", "cp", "r", "R2", "adjR2", "bR2", "KGE", "KGElf", "KGEnp",
    "VE",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricFlag {
    Ok,
    Undefined,
    /// Computed, but outside the range the metric has for positive series.
    OutOfRange,
}

impl MetricFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricFlag::Ok => "ok",
            MetricFlag::Undefined => "undefined",
            MetricFlag::OutOfRange => "out_of_range",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEntry {
    pub metric: String,
    /// `None` when undefined.
    pub value: Option<f64>,
    pub flag: MetricFlag,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub entries: Vec<MetricEntry>,
}

impl MetricsReport {
    fn push(&mut self, name: &str, value: Option<f64>) {
        let value = value.filter(|v| v.is_finite());
        let flag = if value.is_some() {
            MetricFlag::Ok
        } else {
            MetricFlag::Undefined
        };
        self.entries.push(MetricEntry {
            metric: name.to_string(),
            value,
            flag,
        });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entry(name).and_then(|e| e.value)
    }

    pub fn entry(&self, name: &str) -> Option<&MetricEntry> {
        self.entries.iter().find(|e| e.metric == name)
    }

    pub fn is_undefined(&self, name: &str) -> bool {
        self.entry(name).map_or(true, |e| e.flag == MetricFlag::Undefined)
    }

    fn merge(mut self, other: MetricsReport) -> Self {
        self.entries.extend(other.entries);
        self
    }

    fn sorted(mut self) -> Self {
        self.entries.sort_by_key(|e| {
            METRIC_NAMES
                .iter()
                .position(|n| *n == e.metric)
                .unwrap_or(usize::MAX)
        });
        self
    }

    /// `metric,value,flag`; undefined values are written as `NA`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["metric", "value", "flag"])?;
        for e in &self.entries {
            w.write_record([
                e.metric.clone(),
                format_value(e.value),
                e.flag.as_str().to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<metrics csv>", e))?;
        Ok(())
    }
}

pub(crate) fn format_value(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

fn nonzero(x: f64) -> Option<f64> {
    (x != 0.0).then_some(x)
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
}

/// Average ranks (1-based), ties sharing the mean rank.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

fn check(obs: &[f64], sim: &[f64], min_len: usize) -> Result<()> {
    if obs.len() != sim.len() {
        return Err(Error::Contract(format!(
            "observed ({}) and simulated ({}) lengths differ",
            obs.len(),
            sim.len()
        )));
    }
    if obs.len() < min_len {
        return Err(Error::insufficient("goodness-of-fit", min_len, obs.len()));
    }
    if obs.iter().chain(sim).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("goodness-of-fit input".into()));
    }
    Ok(())
}

/// ME, MAE, MSE, RMSE, ubRMSE, NRMSE%, PBIAS%, RSR, rSD.
pub fn error_metrics(obs: &[f64], sim: &[f64]) -> Result<MetricsReport> {
    check(obs, sim, 2)?;
    let n = obs.len() as f64;
    let diff: Vec<f64> = sim.iter().zip(obs).map(|(s, o)| s - o).collect();
    let me = diff.iter().sum::<f64>() / n;
    let mae = diff.iter().map(|d| d.abs()).sum::<f64>() / n;
    let mse = diff.iter().map(|d| d * d).sum::<f64>() / n;
    let rmse = mse.sqrt();
    let ubrmse = (mse - me * me).max(0.0).sqrt();
    let sd_obs = nonzero(sample_sd(obs));
    let sum_obs = nonzero(obs.iter().sum());

    let mut r = MetricsReport::default();
    r.push("ME", Some(me));
    r.push("MAE", Some(mae));
    r.push("MSE", Some(mse));
    r.push("RMSE", Some(rmse));
    r.push("ubRMSE", Some(ubrmse));
    r.push("NRMSE%", sd_obs.map(|sd| 100.0 * rmse / sd));
    r.push("PBIAS%", sum_obs.map(|s| 100.0 * diff.iter().sum::<f64>() / s));
    r.push("RSR", sd_obs.map(|sd| rmse / sd));
    r.push("rSD", sd_obs.map(|sd| sample_sd(sim) / sd));
    Ok(r)
}

/// NSE, NNSE, mNSE, rNSE, wNSE, d, dr, md, rd, cp, VE.
pub fn efficiency_metrics(obs: &[f64], sim: &[f64]) -> Result<MetricsReport> {
    check(obs, sim, 2)?;
    let n = obs.len();
    let mo = mean(obs);
    let sse: f64 = sim.iter().zip(obs).map(|(s, o)| (s - o).powi(2)).sum();
    let sae: f64 = sim.iter().zip(obs).map(|(s, o)| (s - o).abs()).sum();
    let sst: f64 = obs.iter().map(|o| (o - mo).powi(2)).sum();
    let sat: f64 = obs.iter().map(|o| (o - mo).abs()).sum();

    let nse = nonzero(sst).map(|t| 1.0 - sse / t);
    let mnse = nonzero(sat).map(|t| 1.0 - sae / t);

    let any_zero_obs = obs.iter().any(|o| *o == 0.0);
    let rnse = if any_zero_obs || mo == 0.0 {
        None
    } else {
        let num: f64 = sim.iter().zip(obs).map(|(s, o)| ((s - o) / o).powi(2)).sum();
        let den: f64 = obs.iter().map(|o| ((o - mo) / mo).powi(2)).sum();
        nonzero(den).map(|den| 1.0 - num / den)
    };

    let wnse = {
        let num: f64 = sim.iter().zip(obs).map(|(s, o)| o * (s - o).powi(2)).sum();
        let den: f64 = obs.iter().map(|o| o * (o - mo).powi(2)).sum();
        nonzero(den).map(|den| 1.0 - num / den)
    };

    let pot = |power: i32| -> f64 {
        sim.iter()
            .zip(obs)
            .map(|(s, o)| ((s - mo).abs() + (o - mo).abs()).powi(power))
            .sum()
    };
    let d = nonzero(pot(2)).map(|p| 1.0 - sse / p);
    let md = nonzero(pot(1)).map(|p| 1.0 - sae / p);

    let dr = {
        let b = 2.0 * sat;
        if sae == 0.0 && b == 0.0 {
            None
        } else if sae <= b {
            Some(1.0 - sae / b)
        } else {
            Some(b / sae - 1.0)
        }
    };

    let rd = if any_zero_obs || mo == 0.0 {
        None
    } else {
        let num: f64 = sim.iter().zip(obs).map(|(s, o)| ((o - s) / o).powi(2)).sum();
        let den: f64 = sim
            .iter()
            .zip(obs)
            .map(|(s, o)| (((s - mo).abs() + (o - mo).abs()) / mo).powi(2))
            .sum();
        nonzero(den).map(|den| 1.0 - num / den)
    };

    let cp = if n < 3 {
        None
    } else {
        let num: f64 = (1..n).map(|t| (sim[t] - obs[t]).powi(2)).sum();
        let den: f64 = (1..n).map(|t| (obs[t] - obs[t - 1]).powi(2)).sum();
        nonzero(den).map(|den| 1.0 - num / den)
    };

    let ve = nonzero(obs.iter().sum()).map(|s| 1.0 - sae / s);

    let mut r = MetricsReport::default();
    r.push("NSE", nse);
    r.push("NNSE", nse.map(|e| 1.0 / (2.0 - e)));
    r.push("mNSE", mnse);
    r.push("rNSE", rnse);
    r.push("wNSE", wnse);
    r.push("d", d);
    r.push("dr", dr);
    r.push("md", md);
    r.push("rd", rd);
    r.push("cp", cp);
    r.push("VE", ve);
    if let Some(e) = r.entries.iter_mut().find(|e| e.metric == "VE") {
        if e.value.is_some_and(|v| v > 1.0) {
            e.flag = MetricFlag::OutOfRange;
        }
    }
    Ok(r)
}

/// r, R² (as 1 − SSE/SST), adjusted R², bR².
pub fn correlation_metrics(obs: &[f64], sim: &[f64], n_predictors: usize) -> Result<MetricsReport> {
    check(obs, sim, 2)?;
    let n = obs.len();
    let mo = mean(obs);
    let sse: f64 = sim.iter().zip(obs).map(|(s, o)| (s - o).powi(2)).sum();
    let sst: f64 = obs.iter().map(|o| (o - mo).powi(2)).sum();
    let r = pearson(obs, sim);
    let r2 = nonzero(sst).map(|t| 1.0 - sse / t);
    let adj = if n > n_predictors + 1 {
        r2.map(|r2| 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n - n_predictors - 1) as f64)
    } else {
        None
    };
    // Slope of sim regressed on obs.
    let br2 = r.and_then(|r| {
        let ms = mean(sim);
        let sxy: f64 = obs.iter().zip(sim).map(|(o, s)| (o - mo) * (s - ms)).sum();
        let b = (sxy / sst).abs();
        if b == 0.0 {
            None
        } else if b <= 1.0 {
            Some(b * r * r)
        } else {
            Some(r * r / b)
        }
    });

    let mut out = MetricsReport::default();
    out.push("r", r);
    out.push("R2", r2);
    out.push("adjR2", adj);
    out.push("bR2", br2);
    Ok(out)
}

fn kge_from_terms(r: f64, variability: f64, bias: f64) -> f64 {
    1.0 - ((r - 1.0).powi(2) + (variability - 1.0).powi(2) + (bias - 1.0).powi(2)).sqrt()
}

fn kge_2009(obs: &[f64], sim: &[f64]) -> Option<f64> {
    let r = pearson(obs, sim)?;
    let sd_o = nonzero(sample_sd(obs))?;
    let mu_o = nonzero(mean(obs))?;
    let mu_s = nonzero(mean(sim))?;
    Some(kge_from_terms(r, sample_sd(sim) / sd_o, mu_s / mu_o))
}

/// KGE (2009 variability term), KGElf on `1/(x + ε)` with `ε = mean(obs)/100`,
/// and the non-parametric KGEnp.
pub fn kge_metrics(obs: &[f64], sim: &[f64]) -> Result<MetricsReport> {
    check(obs, sim, 2)?;
    let kge = kge_2009(obs, sim);

    let eps = mean(obs) / 100.0;
    let kgelf = if eps > 0.0 && obs.iter().chain(sim).all(|v| v + eps > 0.0) {
        let inv = |x: &[f64]| x.iter().map(|v| 1.0 / (v + eps)).collect::<Vec<_>>();
        kge_2009(&inv(obs), &inv(sim))
    } else {
        None
    };

    let kgenp = (|| {
        let mu_o = nonzero(mean(obs))?;
        let mu_s = nonzero(mean(sim))?;
        let r_s = pearson(&ranks(obs), &ranks(sim))?;
        let n = obs.len() as f64;
        let fdc = |x: &[f64], mu: f64| {
            let mut v: Vec<f64> = x.iter().map(|x| x / (n * mu)).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let alpha = 1.0
            - 0.5
                * fdc(sim, mu_s)
                    .iter()
                    .zip(fdc(obs, mu_o))
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
        Some(kge_from_terms(r_s, alpha, mu_s / mu_o))
    })();

    let mut r = MetricsReport::default();
    r.push("KGE", kge);
    r.push("KGElf", kgelf);
    r.push("KGEnp", kgenp);
    Ok(r)
}

/// Every metric in [`METRIC_NAMES`] order. `n_predictors` feeds adjusted R².
pub fn full_report(obs: &[f64], sim: &[f64], n_predictors: usize) -> Result<MetricsReport> {
    Ok(error_metrics(obs, sim)?
        .merge(efficiency_metrics(obs, sim)?)
        .merge(correlation_metrics(obs, sim, n_predictors)?)
        .merge(kge_metrics(obs, sim)?)
        .sorted())
}
