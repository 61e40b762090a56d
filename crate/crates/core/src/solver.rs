//! Elastic-net penalized least squares by cyclic coordinate descent.
//!
//! For fixed `(λ, α)` each target equation minimizes
//!
//! ```text
//! Σ_t (y_t − ν − z_tᵀ b)² + λ (α ‖b‖₁ + (1 − α) ‖b‖₂²)
//! ```
//!
//! with the intercept `ν` unpenalized. The residual sum of squares is not
//! divided by the sample size, so useful `λ` values grow with the data.
//! Equations share the penalty but separate exactly, so they are solved one
//! at a time.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::design::{destandardize_coeffs, ColumnSource, DesignMatrix, ScalingInfo, SourceKind};
use crate::error::{Error, Result};

/// Coefficients below this magnitude after back-transformation are reported as zero.
pub const SNAP_TO_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    pub lambda: f64,
    pub alpha: f64,
}

impl Penalty {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        Ok(Self { lambda, alpha })
    }

    /// Default mixing weight `1/(k+1)` with a single target.
    pub const DEFAULT_ALPHA: f64 = 0.5;

    pub fn value(&self, coef: impl IntoIterator<Item = f64>) -> f64 {
        let (l1, l2) = coef
            .into_iter()
            .fold((0.0, 0.0), |(a, b), c| (a + c.abs(), b + c * c));
        self.lambda * (self.alpha * l1 + (1.0 - self.alpha) * l2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Stop when the largest coefficient change in a sweep is below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Scale regressors to unit sample sd before fitting.
    pub standardize: bool,
    /// Record the objective after every sweep.
    pub record_trace: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 10_000,
            standardize: true,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub p: usize,
    pub s: usize,
    pub target_names: Vec<String>,
    pub exog_names: Vec<String>,
    pub labels: Vec<String>,
    pub columns: Vec<ColumnSource>,
    pub penalty: Penalty,
    /// Intercepts, one per target.
    pub nu: Vec<f64>,
    /// Original-unit coefficients, `k × q`, in design column order.
    pub coef: Array2<f64>,
    /// Coefficients on the fitted (standardized) scale.
    pub coef_scaled: Array2<f64>,
    pub scaling: ScalingInfo,
    pub sigma2_hat: f64,
    pub support: Vec<String>,
    pub n_obs: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Root mean squared one-step error over the validation segment, when the
    /// model came out of penalty selection.
    pub validation_rmse: Option<Vec<f64>>,
    /// Per-target objective (fitted scale) after each sweep, if recorded.
    pub trace: Vec<Vec<f64>>,
}

impl FittedModel {
    pub fn k(&self) -> usize {
        self.nu.len()
    }

    pub fn m(&self) -> usize {
        self.exog_names.len()
    }

    /// Build a model from original-unit coefficients without fitting.
    pub fn from_coefficients(design: &DesignMatrix, nu: Vec<f64>, coef: Array2<f64>, penalty: Penalty) -> Result<Self> {
        if coef.dim() != (design.k(), design.n_cols()) || nu.len() != design.k() {
            return Err(Error::Contract(format!(
                "coefficients {:?} / intercepts {} do not match design ({}, {})",
                coef.dim(),
                nu.len(),
                design.k(),
                design.n_cols()
            )));
        }
        let mut model = Self {
            p: design.p,
            s: design.s,
            target_names: design.target_names.clone(),
            exog_names: design.exog_names.clone(),
            labels: design.col_labels.clone(),
            columns: design.columns.clone(),
            penalty,
            nu,
            coef_scaled: coef.clone(),
            coef,
            scaling: ScalingInfo::identity(design.n_cols(), design.k()),
            sigma2_hat: 0.0,
            support: Vec::new(),
            n_obs: design.n_rows(),
            iterations: 0,
            converged: true,
            validation_rmse: None,
            trace: Vec::new(),
        };
        model.support = model.support_labels();
        let rss = model.rss(design)?;
        model.sigma2_hat = rss / model.residual_dof(design.n_rows()) as f64;
        Ok(model)
    }

    fn residual_dof(&self, n: usize) -> usize {
        n.saturating_sub(self.support.len() + self.k()).max(1)
    }

    fn support_labels(&self) -> Vec<String> {
        let k = self.k();
        let mut out = Vec::new();
        for i in 0..k {
            for (j, label) in self.labels.iter().enumerate() {
                if self.coef[[i, j]] != 0.0 {
                    out.push(if k == 1 {
                        label.clone()
                    } else {
                        format!("{}:{}", self.target_names[i], label)
                    });
                }
            }
        }
        out
    }

    /// Number of nonzero penalized coefficients in equation `target`.
    pub fn support_size(&self, target: usize) -> usize {
        self.coef.row(target).iter().filter(|c| **c != 0.0).count()
    }

    pub fn predict_row(&self, z_row: ArrayView1<f64>) -> Vec<f64> {
        (0..self.k())
            .map(|i| self.nu[i] + self.coef.row(i).dot(&z_row))
            .collect()
    }

    /// Fitted values for every design row, `n × k`.
    pub fn predict_design(&self, design: &DesignMatrix) -> Result<Array2<f64>> {
        self.check_design(design)?;
        let mut out = design.z.dot(&self.coef.t());
        for (i, mut col) in out.columns_mut().into_iter().enumerate() {
            let nu = self.nu[i];
            col.mapv_inplace(|v| v + nu);
        }
        Ok(out)
    }

    pub fn rss(&self, design: &DesignMatrix) -> Result<f64> {
        let fitted = self.predict_design(design)?;
        Ok((&design.y - &fitted).iter().map(|e| e * e).sum())
    }

    fn check_design(&self, design: &DesignMatrix) -> Result<()> {
        if design.n_cols() != self.coef.ncols() || design.k() != self.k() {
            return Err(Error::Contract(format!(
                "design ({} targets, {} columns) does not match model ({} targets, {} columns)",
                design.k(),
                design.n_cols(),
                self.k(),
                self.coef.ncols()
            )));
        }
        Ok(())
    }

    /// One-step prediction from lag histories (most recent first):
    /// `lags_y` holds `p` target vectors, `lags_x` holds `s` exogenous vectors.
    pub fn predict_one_step(&self, lags_y: &[Vec<f64>], lags_x: &[Vec<f64>]) -> Result<Vec<f64>> {
        if lags_y.len() != self.p || lags_x.len() != self.s {
            return Err(Error::Contract(format!(
                "expected {} target and {} exogenous lags, got {} and {}",
                self.p,
                self.s,
                lags_y.len(),
                lags_x.len()
            )));
        }
        if lags_y.iter().any(|v| v.len() != self.k()) || lags_x.iter().any(|v| v.len() != self.m()) {
            return Err(Error::Contract("lag vector has the wrong width".into()));
        }
        let z: Array1<f64> = self
            .columns
            .iter()
            .map(|c| match c.kind {
                SourceKind::Target => lags_y[c.lag - 1][c.index],
                SourceKind::Exog => lags_x[c.lag - 1][c.index],
            })
            .collect();
        Ok(self.predict_row(z.view()))
    }
}

/// Penalized objective of `model` on `design`: residual sum of squares plus
/// the elastic-net penalty of the original-unit coefficients (intercepts
/// excluded).
pub fn objective(design: &DesignMatrix, model: &FittedModel, penalty: &Penalty) -> Result<f64> {
    let rss = model.rss(design)?;
    Ok(rss + penalty.value(model.coef.iter().copied()))
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

struct EquationFit {
    coef: Vec<f64>,
    sweeps: usize,
    converged: bool,
    trace: Vec<f64>,
}

/// Coordinate descent on a centered system given its Gram matrix `gram = ZᵀZ`,
/// the cross-products `cross = Zᵀy` and `yty = yᵀy`.
fn solve_equation(gram: &Array2<f64>, cross: ArrayView1<f64>, yty: f64, penalty: &Penalty, opts: &FitOptions) -> EquationFit {
    let q = cross.len();
    let l1 = penalty.lambda * penalty.alpha / 2.0;
    let ridge = penalty.lambda * (1.0 - penalty.alpha);
    let mut b = vec![0.0; q];
    // gb = gram · b, maintained incrementally.
    let mut gb = vec![0.0; q];
    let mut trace = Vec::new();
    let objective = |b: &[f64], gb: &[f64]| {
        let quad: f64 = b.iter().zip(gb).map(|(x, y)| x * y).sum();
        let lin: f64 = b.iter().zip(cross.iter()).map(|(x, y)| x * y).sum();
        let rss = (yty - 2.0 * lin + quad).max(0.0);
        rss + penalty.value(b.iter().copied())
    };
    if opts.record_trace {
        trace.push(objective(&b, &gb));
    }
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < opts.max_iter {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..q {
            let gjj = gram[[j, j]];
            let denom = gjj + ridge;
            let new = if denom > 0.0 {
                let rho = cross[j] - (gb[j] - gjj * b[j]);
                soft_threshold(rho, l1) / denom
            } else {
                0.0
            };
            let delta = new - b[j];
            if delta != 0.0 {
                for (l, g) in gb.iter_mut().enumerate() {
                    *g += gram[[l, j]] * delta;
                }
                b[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if opts.record_trace {
            trace.push(objective(&b, &gb));
        }
        if max_change < opts.tol {
            converged = true;
            break;
        }
    }
    EquationFit {
        coef: b,
        sweeps,
        converged,
        trace,
    }
}

/// Fit every target equation of `design` under `penalty`.
pub fn fit(design: &DesignMatrix, penalty: &Penalty, opts: &FitOptions) -> Result<FittedModel> {
    let n = design.n_rows();
    if n == 0 {
        return Err(Error::insufficient("fit", 1, 0));
    }
    if design.z.iter().chain(design.y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design matrix".into()));
    }
    let penalty = Penalty::new(penalty.lambda, penalty.alpha)?;
    let k = design.k();
    let q = design.n_cols();

    let scaling = ScalingInfo::compute(design, opts.standardize);
    let (zc, yc) = scaling.apply(design);
    let gram = zc.t().dot(&zc);
    let cross = zc.t().dot(&yc);

    let mut coef_scaled = Array2::zeros((k, q));
    let mut iterations = 0;
    let mut converged = true;
    let mut trace = Vec::new();
    for i in 0..k {
        let yty = yc.column(i).dot(&yc.column(i));
        let eq = solve_equation(&gram, cross.column(i), yty, &penalty, opts);
        coef_scaled.row_mut(i).assign(&Array1::from(eq.coef));
        iterations = iterations.max(eq.sweeps);
        converged &= eq.converged;
        if opts.record_trace {
            trace.push(eq.trace);
        }
    }
    if !converged {
        log::warn!(
            "coordinate descent did not converge within {} sweeps (lambda {})",
            opts.max_iter,
            penalty.lambda
        );
    }

    let (mut coef, _) = destandardize_coeffs(&coef_scaled, &scaling)?;
    coef.mapv_inplace(|c| if c.abs() < SNAP_TO_ZERO { 0.0 } else { c });
    let z_mean = Array1::from(scaling.z_mean.clone());
    let nu: Vec<f64> = (0..k)
        .map(|i| scaling.y_mean[i] - coef.row(i).dot(&z_mean))
        .collect();

    let mut model = FittedModel {
        p: design.p,
        s: design.s,
        target_names: design.target_names.clone(),
        exog_names: design.exog_names.clone(),
        labels: design.col_labels.clone(),
        columns: design.columns.clone(),
        penalty,
        nu,
        coef,
        coef_scaled,
        scaling,
        sigma2_hat: 0.0,
        support: Vec::new(),
        n_obs: n,
        iterations,
        converged,
        validation_rmse: None,
        trace,
    };
    model.support = model.support_labels();
    let rss = model.rss(design)?;
    model.sigma2_hat = rss / model.residual_dof(n) as f64;
    Ok(model)
}

/// Smallest `λ` at which every penalized coefficient of equation `target` is
/// zero, on the scale the fit uses. Infinite when `α = 0`.
pub fn lambda_max(design: &DesignMatrix, alpha: f64, standardize: bool, target: usize) -> f64 {
    let scaling = ScalingInfo::compute(design, standardize);
    let (zc, yc) = scaling.apply(design);
    let grad = zc.t().dot(&yc.column(target));
    let max = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    2.0 * max / alpha
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::raw_design;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_design(n: usize, q: usize, seed: u64) -> DesignMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = Array2::from_shape_fn((n, q), |_| rng.gen_range(-2.0..2.0));
        let y = Array2::from_shape_fn((n, 1), |(r, _)| {
            1.5 + (0..q).map(|j| (j as f64 - 1.0) * z[[r, j]]).sum::<f64>() + rng.gen_range(-0.5..0.5)
        });
        raw_design(z, y)
    }

    #[test]
    fn huge_lambda_zeroes_everything() {
        let dm = random_design(50, 4, 1);
        let m = fit(&dm, &Penalty::new(1e9, 0.5).unwrap(), &FitOptions::default()).unwrap();
        assert!(m.coef.iter().all(|c| *c == 0.0));
        assert!(m.support.is_empty());
        let mean_y = dm.y.column(0).sum() / 50.0;
        assert!((m.nu[0] - mean_y).abs() < 1e-12);
    }

    #[test]
    fn objective_zero_cases() {
        let dm = raw_design(Array2::zeros((3, 2)), Array2::zeros((3, 1)));
        let pen = Penalty::new(2.0, 0.5).unwrap();
        let m = FittedModel::from_coefficients(&dm, vec![0.0], Array2::zeros((1, 2)), pen).unwrap();
        assert_eq!(objective(&dm, &m, &pen).unwrap(), 0.0);

        let z = Array2::from_shape_vec((3, 2), vec![1., 0., 0., 1., 1., 1.]).unwrap();
        let y = Array2::from_shape_vec((3, 1), vec![2., -1., 1.]).unwrap();
        let dm = raw_design(z, y);
        let pen0 = Penalty::new(0.0, 0.5).unwrap();
        let m = FittedModel::from_coefficients(&dm, vec![0.0], Array2::from_shape_vec((1, 2), vec![2., -1.]).unwrap(), pen0).unwrap();
        assert_eq!(objective(&dm, &m, &pen0).unwrap(), 0.0);
    }

    #[test]
    fn objective_hand_built() {
        // Two rows; coefficients [1, −1]; residuals 0.5 and −1.
        let z = Array2::from_shape_vec((2, 2), vec![1., 0., 0., 1.]).unwrap();
        let y = Array2::from_shape_vec((2, 1), vec![1.5, -2.0]).unwrap();
        let dm = raw_design(z, y);
        let pen = Penalty::new(2.0, 0.5).unwrap();
        let m = FittedModel::from_coefficients(&dm, vec![0.0], Array2::from_shape_vec((1, 2), vec![1., -1.]).unwrap(), pen).unwrap();
        let rss = 0.25 + 1.0;
        assert!((objective(&dm, &m, &pen).unwrap() - (rss + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn objective_dimension_mismatch() {
        let dm = random_design(10, 3, 2);
        let other = random_design(10, 4, 2);
        let m = fit(&other, &Penalty::new(1.0, 0.5).unwrap(), &FitOptions::default()).unwrap();
        assert!(matches!(objective(&dm, &m, &m.penalty), Err(Error::Contract(_))));
    }

    #[test]
    fn objective_non_increasing_per_sweep() {
        for seed in 0..5 {
            let dm = random_design(80, 6, seed);
            let opts = FitOptions {
                record_trace: true,
                ..FitOptions::default()
            };
            for alpha in [0.0, 0.5, 1.0] {
                let m = fit(&dm, &Penalty::new(20.0, alpha).unwrap(), &opts).unwrap();
                for w in m.trace[0].windows(2) {
                    assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{} > {}", w[1], w[0]);
                }
            }
        }
    }

    #[test]
    fn coordinatewise_optimality() {
        let dm = random_design(60, 5, 9);
        let pen = Penalty::new(15.0, 0.7).unwrap();
        let opts = FitOptions {
            tol: 1e-12,
            standardize: false,
            ..FitOptions::default()
        };
        let m = fit(&dm, &pen, &opts).unwrap();
        // Subgradient conditions on the raw objective.
        let resid = &dm.y.column(0) - &m.predict_design(&dm).unwrap().column(0);
        for j in 0..dm.n_cols() {
            let g = -2.0 * dm.z.column(j).dot(&resid) + 2.0 * pen.lambda * (1.0 - pen.alpha) * m.coef[[0, j]];
            let b = m.coef[[0, j]];
            if b != 0.0 {
                assert!((g + pen.lambda * pen.alpha * b.signum()).abs() < 1e-6, "coord {j}: {g}");
            } else {
                assert!(g.abs() <= pen.lambda * pen.alpha + 1e-6);
            }
        }
        // Intercept is the exact unpenalized optimum.
        assert!(resid.sum().abs() < 1e-8);
    }

    #[test]
    fn permuting_columns_permutes_coefficients() {
        let dm = random_design(70, 4, 3);
        let perm = [2usize, 0, 3, 1];
        let mut pd = dm.clone();
        pd.z = dm.z.select(ndarray::Axis(1), &perm);
        let opts = FitOptions {
            tol: 1e-12,
            ..FitOptions::default()
        };
        let pen = Penalty::new(10.0, 0.5).unwrap();
        let a = fit(&dm, &pen, &opts).unwrap();
        let b = fit(&pd, &pen, &opts).unwrap();
        for (new, &old) in perm.iter().enumerate() {
            assert!((a.coef[[0, old]] - b.coef[[0, new]]).abs() < 1e-8);
        }
    }

    #[test]
    fn duplicated_column_sum_matches_single() {
        let dm = random_design(100, 3, 4);
        let mut dup = dm.clone();
        let col = dm.z.column(1).to_owned();
        let mut z = Array2::zeros((100, 4));
        z.slice_mut(ndarray::s![.., 0..3]).assign(&dm.z);
        z.column_mut(3).assign(&col);
        dup.z = z;
        dup.col_labels.push("dup".into());
        dup.columns.push(dup.columns[1]);
        let opts = FitOptions {
            tol: 1e-13,
            max_iter: 100_000,
            standardize: false,
            ..FitOptions::default()
        };
        let pen = Penalty::new(5.0, 1.0).unwrap();
        let single = fit(&dm, &pen, &opts).unwrap();
        let double = fit(&dup, &pen, &opts).unwrap();
        let pair = double.coef[[0, 1]] + double.coef[[0, 3]];
        assert!((pair - single.coef[[0, 1]]).abs() < 1e-6, "{pair} vs {}", single.coef[[0, 1]]);
    }

    #[test]
    fn lambda_max_boundary() {
        let dm = random_design(90, 5, 5);
        for standardize in [false, true] {
            let opts = FitOptions {
                standardize,
                ..FitOptions::default()
            };
            let lmax = lambda_max(&dm, 0.5, standardize, 0);
            let above = fit(&dm, &Penalty::new(lmax * 1.0001, 0.5).unwrap(), &opts).unwrap();
            assert!(above.coef.iter().all(|c| *c == 0.0));
            let below = fit(&dm, &Penalty::new(lmax * 0.99, 0.5).unwrap(), &opts).unwrap();
            assert!(below.coef.iter().any(|c| *c != 0.0));
        }
    }

    #[test]
    fn deterministic_bits() {
        let dm = random_design(120, 6, 6);
        let pen = Penalty::new(12.0, 0.5).unwrap();
        let a = fit(&dm, &pen, &FitOptions::default()).unwrap();
        let b = fit(&dm, &pen, &FitOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_design_rejected() {
        let mut dm = random_design(10, 2, 7);
        dm.z[[3, 1]] = f64::NAN;
        assert!(matches!(
            fit(&dm, &Penalty::new(1.0, 0.5).unwrap(), &FitOptions::default()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn non_convergence_is_flagged() {
        let dm = random_design(40, 5, 8);
        let opts = FitOptions {
            max_iter: 1,
            tol: 1e-15,
            ..FitOptions::default()
        };
        let m = fit(&dm, &Penalty::new(0.0, 0.5).unwrap(), &opts).unwrap();
        assert!(!m.converged);
        assert_eq!(m.iterations, 1);
    }

    #[test]
    fn invalid_penalty() {
        assert!(Penalty::new(-1.0, 0.5).is_err());
        assert!(Penalty::new(1.0, 1.5).is_err());
        assert!(Penalty::new(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn predict_one_step_cases() {
        let dm = random_design(10, 2, 11);
        let pen = Penalty::new(0.0, 0.5).unwrap();
        let m = FittedModel::from_coefficients(&dm, vec![5.0], Array2::zeros((1, 2)), pen).unwrap();
        assert_eq!(m.predict_one_step(&[vec![3.0]], &[vec![1.0]]).unwrap(), vec![5.0]);

        let persist = FittedModel::from_coefficients(&dm, vec![0.0], Array2::from_shape_vec((1, 2), vec![1.0, 0.0]).unwrap(), pen).unwrap();
        assert_eq!(persist.predict_one_step(&[vec![-42.0]], &[vec![9.0]]).unwrap(), vec![-42.0]);

        assert!(matches!(persist.predict_one_step(&[], &[vec![9.0]]), Err(Error::Contract(_))));
    }

    #[test]
    fn sigma2_uses_support_and_intercepts() {
        let dm = random_design(30, 3, 12);
        let m = fit(&dm, &Penalty::new(0.0, 0.5).unwrap(), &FitOptions::default()).unwrap();
        let rss = m.rss(&dm).unwrap();
        assert_eq!(m.support.len(), 3);
        assert!((m.sigma2_hat - rss / (30 - 3 - 1) as f64).abs() < 1e-12);
    }


    mod props {
        use super::*;
        use proptest::prelude::*;

        fn tight() -> FitOptions {
            FitOptions {
                tol: 1e-12,
                max_iter: 100_000,
                ..FitOptions::default()
            }
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn objective_never_increases(seed in 0u64..1000, lambda in 0.0f64..200.0, alpha in 0.0f64..=1.0) {
                let dm = random_design(60, 5, seed);
                let opts = FitOptions { record_trace: true, ..FitOptions::default() };
                let m = fit(&dm, &Penalty::new(lambda, alpha).unwrap(), &opts).unwrap();
                for w in m.trace[0].windows(2) {
                    prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
                }
            }

            #[test]
            fn column_permutation_permutes_coefficients(seed in 0u64..1000, shift in 1usize..5, lambda in 0.0f64..50.0) {
                let dm = random_design(60, 5, seed);
                let q = dm.n_cols();
                let order: Vec<usize> = (0..q).map(|j| (j + shift) % q).collect();
                let z = Array2::from_shape_fn(dm.z.dim(), |(r, j)| dm.z[[r, order[j]]]);
                let permuted = raw_design(z, dm.y.clone());
                let pen = Penalty::new(lambda, 0.7).unwrap();
                let a = fit(&dm, &pen, &tight()).unwrap();
                let b = fit(&permuted, &pen, &tight()).unwrap();
                for j in 0..q {
                    prop_assert!((b.coef[[0, j]] - a.coef[[0, order[j]]]).abs() < 1e-8);
                }
                prop_assert!((a.nu[0] - b.nu[0]).abs() < 1e-8);
            }

            #[test]
            fn above_lambda_max_everything_is_zero(seed in 0u64..1000, alpha in 0.05f64..=1.0, standardize: bool) {
                let dm = random_design(40, 4, seed);
                let lmax = lambda_max(&dm, alpha, standardize, 0);
                let opts = FitOptions { standardize, ..FitOptions::default() };
                let m = fit(&dm, &Penalty::new(lmax * 1.001, alpha).unwrap(), &opts).unwrap();
                prop_assert!(m.coef.iter().all(|c| *c == 0.0));
            }

            #[test]
            fn identical_inputs_identical_bits(seed in 0u64..1000, lambda in 0.0f64..100.0, alpha in 0.0f64..=1.0) {
                let dm = random_design(50, 6, seed);
                let pen = Penalty::new(lambda, alpha).unwrap();
                let a = fit(&dm, &pen, &FitOptions::default()).unwrap();
                let b = fit(&dm, &pen, &FitOptions::default()).unwrap();
                prop_assert_eq!(a, b);
            }

            #[test]
            fn duplicated_lasso_column_splits_mass(seed in 0u64..1000, lambda in 0.5f64..20.0) {
                let base = random_design(50, 2, seed);
                let z = Array2::from_shape_fn((50, 3), |(r, j)| base.z[[r, j.min(1)]]);
                let dup = raw_design(z, base.y.clone());
                let opts = FitOptions { standardize: false, ..tight() };
                let pen = Penalty::new(lambda, 1.0).unwrap();
                let single = fit(&base, &pen, &opts).unwrap();
                let double = fit(&dup, &pen, &opts).unwrap();
                prop_assert!((double.coef[[0, 1]] + double.coef[[0, 2]] - single.coef[[0, 1]]).abs() < 1e-6);
                prop_assert!((double.coef[[0, 0]] - single.coef[[0, 0]]).abs() < 1e-6);
            }
        }
    }
}
