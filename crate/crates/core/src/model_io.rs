//! Versioned JSON form of a fitted model.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::design::{column_layout, DesignMatrix, ScalingInfo, SourceKind};
use crate::error::{Error, Result};
use crate::frame::set_difference;
use crate::solver::{FittedModel, Penalty};

pub const MODEL_VERSION: u32 = 1;

/// `phi[ℓ-1][i][j]` is the effect of target `j` at lag `ℓ` on target `i`;
/// `beta[l-1][i][v]` the effect of exogenous series `v` at lag `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub p: usize,
    pub s: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub target_names: Vec<String>,
    pub exog_names: Vec<String>,
    pub labels: Vec<String>,
    pub nu: Vec<f64>,
    pub phi: Vec<Vec<Vec<f64>>>,
    pub beta: Vec<Vec<Vec<f64>>>,
    pub coef_standardized: Vec<Vec<f64>>,
    pub support: Vec<String>,
    pub sigma2: f64,
    pub scaling: ScalingInfo,
    pub n_obs: usize,
    pub iterations: usize,
    pub converged: bool,
    pub validation_rmse: Option<Vec<f64>>,
    /// Run configuration that produced the model, when written by the CLI.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl ModelDocument {
    pub fn from_model(model: &FittedModel) -> Self {
        let k = model.k();
        let m = model.m();
        let mut phi = vec![vec![vec![0.0; k]; k]; model.p];
        let mut beta = vec![vec![vec![0.0; m]; k]; model.s];
        for (c, src) in model.columns.iter().enumerate() {
            for i in 0..k {
                let v = model.coef[[i, c]];
                match src.kind {
                    SourceKind::Target => phi[src.lag - 1][i][src.index] = v,
                    SourceKind::Exog => beta[src.lag - 1][i][src.index] = v,
                }
            }
        }
        Self {
            version: MODEL_VERSION,
            p: model.p,
            s: model.s,
            alpha: model.penalty.alpha,
            lambda: model.penalty.lambda,
            target_names: model.target_names.clone(),
            exog_names: model.exog_names.clone(),
            labels: model.labels.clone(),
            nu: model.nu.clone(),
            phi,
            beta,
            coef_standardized: model.coef_scaled.rows().into_iter().map(|r| r.to_vec()).collect(),
            support: model.support.clone(),
            sigma2: model.sigma2_hat,
            scaling: model.scaling.clone(),
            n_obs: model.n_obs,
            iterations: model.iterations,
            converged: model.converged,
            validation_rmse: model.validation_rmse.clone(),
            config: None,
        }
    }

    pub fn into_model(self) -> Result<FittedModel> {
        if self.version != MODEL_VERSION {
            return Err(Error::Config(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                self.version
            )));
        }
        let k = self.target_names.len();
        let m = self.exog_names.len();
        let (columns, labels) = column_layout(k, &self.exog_names, self.p, self.s);
        let bad = |what: &str| Error::Config(format!("model document: inconsistent {what}"));
        if labels != self.labels {
            return Err(bad("labels"));
        }
        if self.nu.len() != k
            || self.phi.len() != self.p
            || self.beta.len() != self.s
            || self.phi.iter().any(|b| b.len() != k || b.iter().any(|r| r.len() != k))
            || self.beta.iter().any(|b| b.len() != k || b.iter().any(|r| r.len() != m))
        {
            return Err(bad("coefficient shapes"));
        }
        let q = columns.len();
        if self.coef_standardized.len() != k || self.coef_standardized.iter().any(|r| r.len() != q) {
            return Err(bad("standardized coefficients"));
        }
        if self.scaling.z_mean.len() != q || self.scaling.z_sd.len() != q || self.scaling.y_mean.len() != k {
            return Err(bad("scaling"));
        }
        let coef = Array2::from_shape_fn((k, q), |(i, c)| {
            let src = columns[c];
            match src.kind {
                SourceKind::Target => self.phi[src.lag - 1][i][src.index],
                SourceKind::Exog => self.beta[src.lag - 1][i][src.index],
            }
        });
        let coef_scaled = Array2::from_shape_fn((k, q), |(i, c)| self.coef_standardized[i][c]);
        if coef.iter().chain(coef_scaled.iter()).chain(&self.nu).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model coefficients".into()));
        }
        Ok(FittedModel {
            p: self.p,
            s: self.s,
            target_names: self.target_names,
            exog_names: self.exog_names,
            labels,
            columns,
            penalty: Penalty::new(self.lambda, self.alpha)?,
            nu: self.nu,
            coef,
            coef_scaled,
            scaling: self.scaling,
            sigma2_hat: self.sigma2,
            support: self.support,
            n_obs: self.n_obs,
            iterations: self.iterations,
            converged: self.converged,
            validation_rmse: self.validation_rmse,
            trace: Vec::new(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// A model applies to a design only if both have the same targets and
/// regressor labels in the same order.
pub fn check_compatible(model: &FittedModel, design: &DesignMatrix) -> Result<()> {
    let mut model_cols = model.target_names.clone();
    model_cols.extend(model.labels.iter().cloned());
    let mut data_cols = design.target_names.clone();
    data_cols.extend(design.col_labels.iter().cloned());
    if model_cols == data_cols {
        return Ok(());
    }
    Err(Error::Incompatible {
        missing: set_difference(&model_cols, &data_cols),
        unexpected: set_difference(&data_cols, &model_cols),
    })
}
