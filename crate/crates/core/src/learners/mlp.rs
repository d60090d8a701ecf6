//! Feedforward regression network: dense layers, full-batch Adam.
//!
//! Inputs are mean-imputed then standardized with training statistics, so
//! a missing cell enters the network as exactly 0. Targets are
//! standardized for optimization and mapped back at prediction time; a
//! zero-variance target short-circuits to an exact constant model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ColumnScaler;
use crate::data::Matrix;
use crate::error::LearnerError;
use crate::rng;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Tanh => v.tanh(),
        }
    }

    /// Derivative expressed in terms of the activation output.
    fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - out * out,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedforwardParams {
    /// Hidden layer widths, input to output.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub step_size: f64,
    pub seed: u64,
}

impl Default for FeedforwardParams {
    fn default() -> Self {
        FeedforwardParams {
            hidden: vec![32],
            activation: Activation::Relu,
            epochs: 200,
            step_size: 0.01,
            seed: 0,
        }
    }
}

impl FeedforwardParams {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.hidden.iter().any(|&w| w == 0) {
            return Err(LearnerError::InvalidSpec(
                "hidden layer widths must be positive".into(),
            ));
        }
        if self.step_size <= 0.0 || !self.step_size.is_finite() {
            return Err(LearnerError::InvalidSpec(format!(
                "step_size must be positive and finite, got {}",
                self.step_size
            )));
        }
        Ok(())
    }
}

/// Dense layer: `weights[out][in]`, one bias per output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl Layer {
    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (w_row, b) in self.weights.iter().zip(&self.bias) {
            let mut acc = *b;
            for (w, v) in w_row.iter().zip(input) {
                acc += w * v;
            }
            out.push(acc);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedforwardModel {
    pub params: FeedforwardParams,
    pub(crate) scaler: ColumnScaler,
    pub(crate) target_mean: f64,
    pub(crate) target_std: f64,
    /// Hidden layers followed by the single-unit linear output layer.
    layers: Vec<Layer>,
    pub(crate) warnings: Vec<String>,
}

fn init_layers(params: &FeedforwardParams, n_features: usize) -> Vec<Layer> {
    let mut widths = vec![n_features];
    widths.extend_from_slice(&params.hidden);
    widths.push(1);
    let mut layers = Vec::with_capacity(widths.len() - 1);
    for l in 0..widths.len() - 1 {
        let (fan_in, fan_out) = (widths[l], widths[l + 1]);
        let mut rng = rng::derive_rng(params.seed, "feedforward.init", l as u64);
        let scale = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let weights = (0..fan_out)
            .map(|_| (0..fan_in).map(|_| rng.gen_range(-scale..scale)).collect())
            .collect();
        layers.push(Layer {
            weights,
            bias: vec![0.0; fan_out],
        });
    }
    layers
}

/// Adam per-parameter state, in the flat order (layer, unit, weight..., bias).
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grads[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grads[i] * grads[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + Self::EPS);
        }
    }
}

fn flatten(layers: &[Layer]) -> Vec<f64> {
    let mut flat = Vec::new();
    for layer in layers {
        for row in &layer.weights {
            flat.extend_from_slice(row);
        }
        flat.extend_from_slice(&layer.bias);
    }
    flat
}

fn unflatten(flat: &[f64], layers: &mut [Layer]) {
    let mut at = 0;
    for layer in layers {
        for row in &mut layer.weights {
            let width = row.len();
            row.copy_from_slice(&flat[at..at + width]);
            at += width;
        }
        let width = layer.bias.len();
        layer.bias.copy_from_slice(&flat[at..at + width]);
        at += width;
    }
}

pub(crate) fn fit(
    params: &FeedforwardParams,
    x: &Matrix,
    y: &[f64],
    warnings: Vec<String>,
) -> Result<FeedforwardModel, LearnerError> {
    params.validate()?;
    let scaler = ColumnScaler::fit(x);
    let inputs: Vec<Vec<f64>> = (0..x.n_rows()).map(|r| scaler.transform(x.row(r))).collect();
    let (target_mean, target_std) = stats::stable_mean_pop_std(y).expect("non-empty targets");

    let mut model = FeedforwardModel {
        params: params.clone(),
        scaler,
        target_mean,
        target_std: if target_std == 0.0 { 1.0 } else { target_std },
        layers: init_layers(params, x.n_cols()),
        warnings,
    };
    if target_std == 0.0 {
        // Constant target: zero weights give the exact answer; skip training.
        for layer in &mut model.layers {
            for row in &mut layer.weights {
                row.iter_mut().for_each(|w| *w = 0.0);
            }
        }
        return Ok(model);
    }
    let targets: Vec<f64> = y.iter().map(|t| (t - target_mean) / target_std).collect();

    let n = inputs.len() as f64;
    let mut flat = flatten(&model.layers);
    let mut grads = vec![0.0; flat.len()];
    let mut adam = Adam::new(flat.len());
    let mut grad_layers = model.layers.clone();

    for _ in 0..params.epochs {
        for layer in &mut grad_layers {
            for row in &mut layer.weights {
                row.iter_mut().for_each(|g| *g = 0.0);
            }
            layer.bias.iter_mut().for_each(|g| *g = 0.0);
        }
        for (input, target) in inputs.iter().zip(&targets) {
            accumulate_gradients(&model, input, *target, &mut grad_layers);
        }
        let flat_grads = flatten(&grad_layers);
        for (g, fg) in grads.iter_mut().zip(&flat_grads) {
            *g = fg / n;
        }
        adam.step(&mut flat, &grads, params.step_size);
        unflatten(&flat, &mut model.layers);
    }
    if flat.iter().any(|w| !w.is_finite()) {
        return Err(LearnerError::InvalidSpec(
            "training diverged to non-finite weights; lower step_size".into(),
        ));
    }
    Ok(model)
}

/// Backpropagate one row's squared-error gradient into `grad_layers`.
fn accumulate_gradients(
    model: &FeedforwardModel,
    input: &[f64],
    target: f64,
    grad_layers: &mut [Layer],
) {
    let act = model.params.activation;
    let n_layers = model.layers.len();
    // Forward pass, keeping each layer's activation output.
    let mut activations: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
    activations.push(input.to_vec());
    let mut pre = Vec::new();
    for (l, layer) in model.layers.iter().enumerate() {
        layer.forward(activations.last().unwrap(), &mut pre);
        let out = if l + 1 == n_layers {
            pre.clone() // linear output layer
        } else {
            pre.iter().map(|&v| act.apply(v)).collect()
        };
        activations.push(out);
    }
    let prediction = activations[n_layers][0];
    // d(½(pred−target)²)/dpred
    let mut delta = vec![prediction - target];
    for l in (0..n_layers).rev() {
        let input_act = &activations[l];
        let grad = &mut grad_layers[l];
        for (u, d) in delta.iter().enumerate() {
            grad.bias[u] += d;
            for (gw, iv) in grad.weights[u].iter_mut().zip(input_act) {
                *gw += d * iv;
            }
        }
        if l > 0 {
            let mut prev = vec![0.0; input_act.len()];
            for (u, d) in delta.iter().enumerate() {
                for (p, w) in prev.iter_mut().zip(&model.layers[l].weights[u]) {
                    *p += d * w;
                }
            }
            for (p, out) in prev.iter_mut().zip(input_act) {
                *p *= act.derivative_from_output(*out);
            }
            delta = prev;
        }
    }
}

impl FeedforwardModel {
    pub(crate) fn predict_row(&self, row: &[f64]) -> f64 {
        let mut current = self.scaler.transform(row);
        let mut next = Vec::new();
        let n_layers = self.layers.len();
        for (l, layer) in self.layers.iter().enumerate() {
            layer.forward(&current, &mut next);
            if l + 1 < n_layers {
                for v in &mut next {
                    *v = self.params.activation.apply(*v);
                }
            }
            std::mem::swap(&mut current, &mut next);
        }
        current[0] * self.target_std + self.target_mean
    }
}
