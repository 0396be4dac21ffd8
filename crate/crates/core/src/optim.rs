//! Losses with L2 penalty, Adam, and the staircase learning-rate schedule.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structnet::NetworkParams;

/// Learning rate multiplied by `decay_ratio` once every `decay_step`
/// optimizer steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub initial_rate: f64,
    pub decay_ratio: f64,
    pub decay_step: u64,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self { initial_rate: 0.01, decay_ratio: 0.9, decay_step: 7000 }
    }
}

impl LrSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_rate > 0.0 && self.initial_rate.is_finite()) {
            return Err(Error::Config("schedule.initial_rate must be > 0".into()));
        }
        if !(self.decay_ratio > 0.0 && self.decay_ratio <= 1.0) {
            return Err(Error::Config("schedule.decay_ratio must be in (0, 1]".into()));
        }
        if self.decay_step == 0 {
            return Err(Error::Config("schedule.decay_step must be >= 1".into()));
        }
        Ok(())
    }

    pub fn lr_at(&self, step: u64) -> f64 {
        let plateaus = (step / self.decay_step) as i32;
        self.initial_rate * self.decay_ratio.powi(plateaus)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    CrossEntropy,
    Mse,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::CrossEntropy => "cross_entropy",
            LossKind::Mse => "mse",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "cross_entropy" | "ce" | "crossentropy" => Ok(LossKind::CrossEntropy),
            "mse" => Ok(LossKind::Mse),
            _ => Err(Error::LossUndefined(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub kind: LossKind,
    /// Multiplier on the sum of squared weights (biases excluded).
    pub reg_beta: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { kind: LossKind::CrossEntropy, reg_beta: 0.05 }
    }
}

impl LossConfig {
    pub fn cross_entropy(reg_beta: f64) -> Self {
        Self { kind: LossKind::CrossEntropy, reg_beta }
    }

    pub fn mse(reg_beta: f64) -> Self {
        Self { kind: LossKind::Mse, reg_beta }
    }
}

const LOG_CLAMP: f64 = 1e-12;

/// Loss of one prediction against class `target`, without the penalty.
pub fn data_loss(probabilities: &[f64], target: usize, kind: LossKind) -> f64 {
    match kind {
        LossKind::Mse => {
            let k = probabilities.len() as f64;
            probabilities
                .iter()
                .enumerate()
                .map(|(j, &p)| {
                    let y = if j == target { 1.0 } else { 0.0 };
                    (p - y) * (p - y)
                })
                .sum::<f64>()
                / k
        }
        LossKind::CrossEntropy => -probabilities[target].max(LOG_CLAMP).ln(),
    }
}

pub fn l2_penalty(params: &NetworkParams, reg_beta: f64) -> f64 {
    reg_beta * params.sum_squared_weights()
}

pub fn compute_loss(
    probabilities: &[f64],
    target: usize,
    params: &NetworkParams,
    config: &LossConfig,
) -> f64 {
    data_loss(probabilities, target, config.kind) + l2_penalty(params, config.reg_beta)
}

/// Derivative of the data loss with respect to the output logits, through
/// the softmax.
pub fn output_delta(probabilities: &[f64], target: usize, kind: LossKind) -> Vec<f64> {
    let y = |j: usize| if j == target { 1.0 } else { 0.0 };
    match kind {
        LossKind::CrossEntropy => probabilities.iter().enumerate().map(|(j, &p)| p - y(j)).collect(),
        LossKind::Mse => {
            let k = probabilities.len() as f64;
            // dL/dp_k = (2/K)(p_k - y_k); dp_k/dz_j = p_k (delta_jk - p_j)
            let dl_dp: Vec<f64> =
                probabilities.iter().enumerate().map(|(j, &p)| 2.0 / k * (p - y(j))).collect();
            let weighted: f64 = dl_dp.iter().zip(probabilities).map(|(g, p)| g * p).sum();
            probabilities.iter().zip(&dl_dp).map(|(&p, &g)| p * (g - weighted)).collect()
        }
    }
}

/// Adds `2 * reg_beta * w` to every weight gradient.
pub fn add_l2_gradient(params: &NetworkParams, reg_beta: f64, grads: &mut NetworkParams) {
    if reg_beta == 0.0 {
        return;
    }
    for (p, g) in params.layers.iter().zip(&mut grads.layers) {
        for (w, gw) in p.weights.iter().zip(&mut g.weights) {
            *gw += 2.0 * reg_beta * w;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..1.0).contains(&v);
        if !unit(self.beta1) || !unit(self.beta2) || self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Config("adam betas must be in [0, 1) and epsilon > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: NetworkParams,
    pub v: NetworkParams,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(like: &NetworkParams, config: AdamConfig) -> Self {
        let mut zeros = like.clone();
        zeros.fill(0.0);
        Self { m: zeros.clone(), v: zeros, t: 0, config }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut NetworkParams,
    gradients: &NetworkParams,
    lr: f64,
) -> Result<()> {
    if !params.same_shape(gradients) || !params.same_shape(&state.m) || !params.same_shape(&state.v) {
        return Err(Error::ShapeMismatch);
    }
    let AdamConfig { beta1, beta2, epsilon } = state.config;
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let values = params
        .values_mut()
        .zip(gradients.values())
        .zip(state.m.values_mut().zip(state.v.values_mut()));
    for ((p, &g), (m, v)) in values {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}
