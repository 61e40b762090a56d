//! Seeded synthetic VARX data with known coefficients.
//!
//! Noise comes from ChaCha8, a portable generator, so a seed reproduces the
//! same frame on every platform.

use chrono::NaiveDate;
use nalgebra::DMatrix;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::frame::{ColumnMeta, Resolution, Role, TimeSeriesFrame};

pub const DEFAULT_BURN_IN: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExogGenerator {
    /// Independent standard normal draws.
    Iid,
    /// Unit-variance AR(1) with the given autocorrelation.
    Ar1 { rho: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    /// `Φ^(ℓ)` for ℓ = 1..p, each `k × k`.
    pub phi: Vec<Array2<f64>>,
    /// `β^(j)` for j = 1..s, each `k × m`.
    pub beta: Vec<Array2<f64>>,
    pub nu: Vec<f64>,
    pub sigma: f64,
    pub exog: ExogGenerator,
    pub seed: u64,
    pub burn_in: usize,
    /// Start from this `y_0` (pre-sample lags zero) instead of a burn-in.
    pub initial: Option<Vec<f64>>,
    pub start: NaiveDate,
}

impl SynthSpec {
    /// Univariate AR(1) without exogenous series, unit noise.
    pub fn ar1(n: usize, phi: f64, seed: u64) -> Self {
        Self {
            n,
            phi: vec![Array2::from_elem((1, 1), phi)],
            beta: Vec::new(),
            nu: vec![0.0],
            sigma: 1.0,
            exog: ExogGenerator::Iid,
            seed,
            burn_in: DEFAULT_BURN_IN,
            initial: None,
            start: NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date"),
        }
    }

    /// Single target with `m` exogenous series; `phi[ℓ-1]` is the lag-ℓ
    /// coefficient and `beta[j-1]` the lag-j row of exogenous coefficients.
    pub fn univariate(n: usize, phi: &[f64], beta: &[Vec<f64>], sigma: f64, seed: u64) -> Self {
        Self {
            n,
            phi: phi.iter().map(|v| Array2::from_elem((1, 1), *v)).collect(),
            beta: beta
                .iter()
                .map(|row| Array2::from_shape_vec((1, row.len()), row.clone()).expect("row shape"))
                .collect(),
            nu: vec![0.0],
            sigma,
            exog: ExogGenerator::Iid,
            seed,
            burn_in: DEFAULT_BURN_IN,
            initial: None,
            start: NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date"),
        }
    }

    pub fn k(&self) -> usize {
        self.nu.len()
    }

    pub fn m(&self) -> usize {
        self.beta.first().map_or(0, |b| b.ncols())
    }

    fn validate(&self) -> Result<()> {
        let k = self.k();
        let m = self.m();
        if k == 0 {
            return Err(Error::Config("at least one target is required".into()));
        }
        if self.phi.iter().any(|p| p.dim() != (k, k)) || self.beta.iter().any(|b| b.dim() != (k, m)) {
            return Err(Error::Config("coefficient matrices have inconsistent shapes".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config("noise sd must be finite and >= 0".into()));
        }
        if let ExogGenerator::Ar1 { rho } = self.exog {
            if !(rho.abs() < 1.0) {
                return Err(Error::Config("exogenous AR(1) needs |rho| < 1".into()));
            }
        }
        if self.initial.as_ref().is_some_and(|v| v.len() != k) {
            return Err(Error::Config("initial state has the wrong length".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("series length must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    pub phi: Vec<Array2<f64>>,
    pub beta: Vec<Array2<f64>>,
    pub nu: Vec<f64>,
    pub sigma: f64,
    pub spectral_radius: f64,
}

/// Largest eigenvalue modulus of the VAR companion matrix.
pub fn spectral_radius(phi: &[Array2<f64>]) -> f64 {
    let Some(first) = phi.first() else {
        return 0.0;
    };
    let k = first.nrows();
    let dim = k * phi.len();
    let mut companion = DMatrix::<f64>::zeros(dim, dim);
    for (l, block) in phi.iter().enumerate() {
        for i in 0..k {
            for j in 0..k {
                companion[(i, l * k + j)] = block[[i, j]];
            }
        }
    }
    for i in k..dim {
        companion[(i, i - k)] = 1.0;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn simulate(spec: &SynthSpec) -> Result<(TimeSeriesFrame, SynthTruth)> {
    spec.validate()?;
    let radius = spectral_radius(&spec.phi);
    if radius >= 1.0 {
        return Err(Error::Unstable {
            spectral_radius: radius,
        });
    }
    let k = spec.k();
    let m = spec.m();
    let p = spec.phi.len();
    let s = spec.beta.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

    // Histories, most recent last; pre-sample values are zero.
    let depth = p.max(s).max(1);
    let mut ys: Vec<Vec<f64>> = vec![vec![0.0; k]; depth];
    let mut xs: Vec<Vec<f64>> = vec![vec![0.0; m]; depth];

    let (burn_in, mut out_y, mut out_x) = (
        if spec.initial.is_some() { 0 } else { spec.burn_in },
        Vec::with_capacity(spec.n),
        Vec::with_capacity(spec.n),
    );

    let next_x = |prev: &[f64], normal: &mut dyn FnMut() -> f64| -> Vec<f64> {
        match spec.exog {
            ExogGenerator::Iid => (0..m).map(|_| normal()).collect(),
            ExogGenerator::Ar1 { rho } => {
                let scale = (1.0 - rho * rho).sqrt();
                prev.iter().map(|x| rho * x + scale * normal()).collect()
            }
        }
    };

    let mut produced = 0;
    if let Some(init) = &spec.initial {
        let x0 = next_x(&xs[xs.len() - 1], &mut normal);
        ys.push(init.clone());
        xs.push(x0.clone());
        out_y.push(init.clone());
        out_x.push(x0);
        produced = 1;
    }
    while produced < burn_in + spec.n {
        let x_t = next_x(&xs[xs.len() - 1], &mut normal);
        let mut y_t = spec.nu.clone();
        let len = ys.len();
        for (l, block) in spec.phi.iter().enumerate() {
            let lagged = &ys[len - 1 - l];
            for i in 0..k {
                for j in 0..k {
                    y_t[i] += block[[i, j]] * lagged[j];
                }
            }
        }
        for (l, block) in spec.beta.iter().enumerate() {
            let lagged = &xs[len - 1 - l];
            for i in 0..k {
                for j in 0..m {
                    y_t[i] += block[[i, j]] * lagged[j];
                }
            }
        }
        for v in y_t.iter_mut() {
            *v += spec.sigma * normal();
        }
        if produced >= burn_in {
            out_y.push(y_t.clone());
            out_x.push(x_t.clone());
        }
        ys.push(y_t);
        xs.push(x_t);
        if ys.len() > 2 * depth + 1 {
            ys.drain(..ys.len() - depth - 1);
            xs.drain(..xs.len() - depth - 1);
        }
        produced += 1;
    }

    let n = spec.n;
    let dates = (0..n)
        .map(|i| spec.start + chrono::Duration::days(i as i64))
        .collect();
    let targets = Array2::from_shape_fn((n, k), |(r, c)| out_y[r][c]);
    let exog = Array2::from_shape_fn((n, m), |(r, c)| out_x[r][c]);
    let frame = TimeSeriesFrame::new(
        dates,
        Resolution::Daily,
        (1..=k)
            .map(|i| ColumnMeta::new(format!("y{i}"), "cm", Role::Target))
            .collect(),
        targets,
        (1..=m)
            .map(|j| ColumnMeta::new(format!("x{j}"), "", Role::Exog))
            .collect(),
        exog,
    )?;
    Ok((
        frame,
        SynthTruth {
            phi: spec.phi.clone(),
            beta: spec.beta.clone(),
            nu: spec.nu.clone(),
            sigma: spec.sigma,
            spectral_radius: radius,
        },
    ))
}
