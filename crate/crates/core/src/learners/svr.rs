//! Epsilon-insensitive support-vector regression.
//!
//! Solves the bias-free dual by cyclic coordinate descent: minimize
//! ½βᵀKβ − βᵀy + ε‖β‖₁ subject to |βᵢ| ≤ C, where f(x) = Σ βᵢ K(xᵢ, x).
//! Targets are standardized (making the zero-bias form adequate) and
//! features are mean-imputed and standardized like the feedforward kind.

use serde::{Deserialize, Serialize};

use super::ColumnScaler;
use crate::data::Matrix;
use crate::error::LearnerError;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Kernel {
    Linear,
    Rbf {
        /// `None` selects the median heuristic: 1 / median squared
        /// pairwise distance of the (standardized) training rows.
        gamma: Option<f64>,
    },
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Rbf { gamma: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SupportVectorParams {
    pub kernel: Kernel,
    /// Box constraint C.
    pub regularization: f64,
    /// Epsilon-tube half-width, in standardized target units.
    pub epsilon: f64,
    /// Maximum coordinate-descent sweeps.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SupportVectorParams {
    fn default() -> Self {
        SupportVectorParams {
            kernel: Kernel::default(),
            regularization: 1.0,
            epsilon: 0.1,
            max_iter: 200,
            seed: 0,
        }
    }
}

impl SupportVectorParams {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.regularization <= 0.0 {
            return Err(LearnerError::InvalidSpec(
                "regularization must be positive".into(),
            ));
        }
        if self.epsilon < 0.0 {
            return Err(LearnerError::InvalidSpec(
                "epsilon must be nonnegative".into(),
            ));
        }
        if let Kernel::Rbf { gamma: Some(g) } = self.kernel {
            if g <= 0.0 || !g.is_finite() {
                return Err(LearnerError::InvalidSpec(format!(
                    "rbf gamma must be positive and finite, got {g}"
                )));
            }
        }
        if self.max_iter == 0 {
            return Err(LearnerError::InvalidSpec("max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVectorModel {
    pub params: SupportVectorParams,
    pub(crate) scaler: ColumnScaler,
    pub(crate) target_mean: f64,
    pub(crate) target_std: f64,
    /// Resolved bandwidth; 0 for the linear kernel.
    pub(crate) gamma: f64,
    /// Standardized rows with nonzero dual coefficients.
    pub(crate) support: Matrix,
    pub(crate) beta: Vec<f64>,
    pub(crate) warnings: Vec<String>,
}

fn kernel_value(kernel: Kernel, gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    match kernel {
        Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        Kernel::Rbf { .. } => {
            let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            (-gamma * sq).exp()
        }
    }
}

/// Median squared pairwise distance over at most 256 rows; falls back to
/// 1/width when the sample is degenerate.
fn median_heuristic_gamma(rows: &[Vec<f64>], width: usize) -> f64 {
    let m = rows.len().min(256);
    let mut sq_dists = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            let d: f64 = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            sq_dists.push(d);
        }
    }
    match stats::quantile(&sq_dists, 0.5) {
        Some(med) if med > 0.0 => 1.0 / med,
        _ => 1.0 / width.max(1) as f64,
    }
}

pub(crate) fn fit(
    params: &SupportVectorParams,
    x: &Matrix,
    y: &[f64],
    warnings: Vec<String>,
) -> Result<SupportVectorModel, LearnerError> {
    params.validate()?;
    let scaler = ColumnScaler::fit(x);
    let rows: Vec<Vec<f64>> = (0..x.n_rows()).map(|r| scaler.transform(x.row(r))).collect();
    let (target_mean, raw_std) = stats::stable_mean_pop_std(y).expect("non-empty targets");
    let target_std = if raw_std == 0.0 { 1.0 } else { raw_std };
    let targets: Vec<f64> = y.iter().map(|t| (t - target_mean) / target_std).collect();

    let gamma = match params.kernel {
        Kernel::Linear => 0.0,
        Kernel::Rbf { gamma: Some(g) } => g,
        Kernel::Rbf { gamma: None } => median_heuristic_gamma(&rows, x.n_cols()),
    };

    let n = rows.len();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let k = kernel_value(params.kernel, gamma, &rows[i], &rows[j]);
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }
    }

    let c = params.regularization;
    let eps = params.epsilon;
    let mut beta = vec![0.0; n];
    // f[i] = current Σ_j β_j K_ij
    let mut f = vec![0.0; n];
    for _ in 0..params.max_iter {
        let mut max_delta = 0.0f64;
        for i in 0..n {
            let k_ii = gram[i * n + i];
            if k_ii <= 0.0 {
                continue; // zero row under a linear kernel
            }
            // Residual with coordinate i removed, then the soft-threshold
            // step for the l1 term.
            let r = targets[i] - (f[i] - beta[i] * k_ii);
            let unclipped = r.signum() * (r.abs() - eps).max(0.0) / k_ii;
            let new = unclipped.clamp(-c, c);
            let delta = new - beta[i];
            if delta != 0.0 {
                beta[i] = new;
                for j in 0..n {
                    f[j] += delta * gram[i * n + j];
                }
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < 1e-10 {
            break;
        }
    }

    let kept: Vec<usize> = (0..n).filter(|&i| beta[i] != 0.0).collect();
    let support_rows: Vec<Vec<f64>> = kept.iter().map(|&i| rows[i].clone()).collect();
    Ok(SupportVectorModel {
        params: params.clone(),
        scaler,
        target_mean,
        target_std,
        gamma,
        support: Matrix::from_rows(&support_rows),
        beta: kept.iter().map(|&i| beta[i]).collect(),
        warnings,
    })
}

impl SupportVectorModel {
    pub(crate) fn predict_row(&self, row: &[f64]) -> f64 {
        let z = self.scaler.transform(row);
        let mut acc = 0.0;
        for (i, b) in self.beta.iter().enumerate() {
            acc += b * kernel_value(self.params.kernel, self.gamma, self.support.row(i), &z);
        }
        acc * self.target_std + self.target_mean
    }
}
