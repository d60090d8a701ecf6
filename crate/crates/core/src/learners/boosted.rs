//! Squared-error gradient boosting over the shared tree grower.
//!
//! Each round fits one tree to the current residuals; leaf values carry
//! l2 shrinkage (Σresidual / (count + l2)) and the learning rate is baked
//! into the stored leaves so prediction is a plain sum over trees plus the
//! base score.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::tree::{self, GrowConfig, TreeNode};
use crate::data::Matrix;
use crate::error::LearnerError;
use crate::rng;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostedParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: Option<u32>,
    pub min_child_weight: f64,
    pub l2_penalty: f64,
    /// Fraction of rows drawn (without replacement) per round.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for BoostedParams {
    fn default() -> Self {
        BoostedParams {
            rounds: 50,
            learning_rate: 0.3,
            max_depth: Some(3),
            min_child_weight: 1.0,
            l2_penalty: 1.0,
            subsample: 1.0,
            seed: 0,
        }
    }
}

impl BoostedParams {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.learning_rate <= 0.0 || self.learning_rate > 1.0 {
            return Err(LearnerError::InvalidSpec(format!(
                "learning_rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.subsample <= 0.0 || self.subsample > 1.0 {
            return Err(LearnerError::InvalidSpec(format!(
                "subsample must be in (0, 1], got {}",
                self.subsample
            )));
        }
        if self.min_child_weight <= 0.0 {
            return Err(LearnerError::InvalidSpec(
                "min_child_weight must be positive".into(),
            ));
        }
        if self.l2_penalty < 0.0 {
            return Err(LearnerError::InvalidSpec(
                "l2_penalty must be nonnegative".into(),
            ));
        }
        if self.max_depth == Some(0) {
            return Err(LearnerError::InvalidSpec(
                "max_depth must be at least 1 when set".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub params: BoostedParams,
    pub(crate) n_features: usize,
    pub(crate) base_score: f64,
    pub(crate) trees: Vec<Vec<TreeNode>>,
    pub(crate) gains: Vec<f64>,
    /// Training mean squared error after each round; non-increasing when
    /// subsample = 1.
    pub train_mse: Vec<f64>,
    pub(crate) warnings: Vec<String>,
}

pub(crate) fn fit(
    params: &BoostedParams,
    x: &Matrix,
    y: &[f64],
    warnings: Vec<String>,
) -> Result<BoostedModel, LearnerError> {
    params.validate()?;
    let n = x.n_rows();
    let base_score = stats::stable_mean(y).expect("non-empty targets");
    let mut preds = vec![base_score; n];
    let mut residuals = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.rounds);
    let mut gains = vec![0.0; x.n_cols()];
    let mut train_mse = Vec::with_capacity(params.rounds);
    let cfg = GrowConfig {
        max_depth: params.max_depth,
        min_leaf: params.min_child_weight,
        l2: params.l2_penalty,
        leaf_scale: params.learning_rate,
    };
    let all_rows: Vec<usize> = (0..n).collect();
    for round in 0..params.rounds {
        for i in 0..n {
            residuals[i] = y[i] - preds[i];
        }
        let rows = if params.subsample < 1.0 {
            let take = ((params.subsample * n as f64).round() as usize).clamp(1, n);
            let mut rng = rng::derive_rng(params.seed, "boosted.subsample", round as u64);
            let mut pool = all_rows.clone();
            pool.partial_shuffle(&mut rng, take);
            pool.truncate(take);
            pool
        } else {
            all_rows.clone()
        };
        let grown = tree::grow(x, &rows, &residuals, &cfg);
        for i in 0..n {
            preds[i] += tree::predict_row(&grown.nodes, x.row(i));
        }
        for (g, add) in gains.iter_mut().zip(&grown.gains) {
            *g += add;
        }
        trees.push(grown.nodes);
        let mut sq: Vec<f64> = y.iter().zip(&preds).map(|(t, p)| (t - p) * (t - p)).collect();
        train_mse.push(stats::stable_sum(&mut sq) / n as f64);
    }
    Ok(BoostedModel {
        params: params.clone(),
        n_features: x.n_cols(),
        base_score,
        trees,
        gains,
        train_mse,
        warnings,
    })
}

impl BoostedModel {
    pub(crate) fn predict_row(&self, row: &[f64]) -> f64 {
        let mut out = self.base_score;
        for nodes in &self.trees {
            out += tree::predict_row(nodes, row);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn fit_plain(params: &BoostedParams, x: &Matrix, y: &[f64]) -> BoostedModel {
        fit(params, x, y, Vec::new()).unwrap()
    }

    #[test]
    fn zero_rounds_predicts_the_target_mean() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let y = [1.0, 2.0, 3.0, 6.0];
        let params = BoostedParams {
            rounds: 0,
            ..BoostedParams::default()
        };
        let model = fit_plain(&params, &x, &y);
        assert_eq!(model.predict_row(&[99.0]), 3.0);
        assert!(model.train_mse.is_empty());
    }

    #[test]
    fn constant_targets_yield_constant_predictions_and_zero_gains() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let y = [5.0, 5.0, 5.0, 5.0];
        let model = fit_plain(&BoostedParams::default(), &x, &y);
        assert_eq!(model.predict_row(&[-7.0]), 5.0);
        assert_eq!(model.predict_row(&[f64::NAN]), 5.0);
        assert!(model.gains.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn xor_interaction_is_learned() {
        let mut rng = rng::derive_rng(11, "test.xor", 0);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..100 {
            let a = f64::from(rng.gen_range(0..2u8));
            let b = f64::from(rng.gen_range(0..2u8));
            rows.push(vec![a, b]);
            y.push(if a == b { 0.0 } else { 1.0 });
        }
        let x = Matrix::from_rows(&rows);
        let params = BoostedParams {
            rounds: 50,
            max_depth: Some(2),
            ..BoostedParams::default()
        };
        let model = fit_plain(&params, &x, &y);
        assert!(
            *model.train_mse.last().unwrap() < 0.05,
            "final training MSE {} not below 0.05",
            model.train_mse.last().unwrap()
        );
    }

    #[test]
    fn training_loss_never_increases_without_subsampling() {
        let mut rng = rng::derive_rng(3, "test.loss", 0);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r[0] * 2.0 - r[1] + (r[0] * r[1]).sin())
            .collect();
        let x = Matrix::from_rows(&rows);
        let model = fit_plain(&BoostedParams::default(), &x, &y);
        for pair in model.train_mse.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "loss increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn refit_is_bit_identical() {
        let mut rng = rng::derive_rng(5, "test.repro", 0);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0].abs() + r[2]).collect();
        let x = Matrix::from_rows(&rows);
        let params = BoostedParams {
            subsample: 0.7,
            seed: 9,
            ..BoostedParams::default()
        };
        let a = fit_plain(&params, &x, &y);
        let b = fit_plain(&params, &x, &y);
        assert_eq!(a, b);
    }

    #[test]
    fn row_permutation_does_not_move_predictions() {
        let mut rng = rng::derive_rng(7, "test.perm", 0);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                vec![
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    if rng.gen_bool(0.2) { f64::NAN } else { rng.gen_range(0.0..1.0) },
                ]
            })
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r[0] - 0.5 * r[1] + if r[2].is_nan() { 1.0 } else { r[2] })
            .collect();
        let x = Matrix::from_rows(&rows);

        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.reverse();
        order.swap(3, 17);
        let shuffled_rows: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].clone()).collect();
        let shuffled_y: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let xs = Matrix::from_rows(&shuffled_rows);

        let a = fit_plain(&BoostedParams::default(), &x, &y);
        let b = fit_plain(&BoostedParams::default(), &xs, &shuffled_y);
        let probe = [0.3, -1.2, f64::NAN];
        assert_eq!(a.predict_row(&probe).to_bits(), b.predict_row(&probe).to_bits());
        assert_eq!(a.base_score.to_bits(), b.base_score.to_bits());
    }
}
