use super::params::NetworkParams;
use super::topology::ConnectivitySpec;
use crate::error::{Error, Result};
use crate::optim::{add_l2_gradient, output_delta, LossConfig, LossKind};

/// Cached pre-activations and activations of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    /// Per layer: affine outputs before the nonlinearity (logits for the
    /// output layer).
    pub pre: Vec<Vec<f64>>,
    /// Per layer: tanh activations for hidden layers, softmax
    /// probabilities for the output layer.
    pub act: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn probabilities(&self) -> &[f64] {
        self.act.last().unwrap()
    }

    /// Predicted class; ties go to the lowest index.
    pub fn predicted(&self) -> usize {
        argmax(self.probabilities())
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Softmax with the maximum logit subtracted first.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn affine(spec: &ConnectivitySpec, params: &NetworkParams, layer: usize, input: &[f64]) -> Vec<f64> {
    let topo = spec.layer(layer);
    let p = &params.layers[layer];
    (0..topo.neurons())
        .map(|n| {
            let w = &p.weights[topo.edge_range(n)];
            let dot: f64 = w.iter().zip(topo.in_edges(n)).map(|(w, &s)| w * input[s]).sum();
            dot + p.biases[n]
        })
        .collect()
}

pub fn forward(spec: &ConnectivitySpec, params: &NetworkParams, input: &[f64]) -> Result<ForwardTrace> {
    let expected = spec.layer(0).inputs();
    if input.len() != expected {
        return Err(Error::InputLength { expected, got: input.len() });
    }
    if !input.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    if !params.matches(spec) {
        return Err(Error::ShapeMismatch);
    }
    let depth = spec.layers().len();
    let mut pre = Vec::with_capacity(depth);
    let mut act: Vec<Vec<f64>> = Vec::with_capacity(depth);
    for layer in 0..depth {
        let prev = if layer == 0 { input } else { &act[layer - 1] };
        let z = affine(spec, params, layer, prev);
        let a = if layer + 1 == depth { softmax(&z) } else { z.iter().map(|v| v.tanh()).collect() };
        pre.push(z);
        act.push(a);
    }
    Ok(ForwardTrace { input: input.to_vec(), pre, act })
}

/// Adds `scale` times the data-loss gradient for one sample into `grads`,
/// given the loss derivative with respect to the output logits.
pub(crate) fn accumulate_gradient(
    spec: &ConnectivitySpec,
    params: &NetworkParams,
    trace: &ForwardTrace,
    output_delta: Vec<f64>,
    scale: f64,
    grads: &mut NetworkParams,
) {
    let mut delta = output_delta;
    for layer in (0..spec.layers().len()).rev() {
        let topo = spec.layer(layer);
        let w = &params.layers[layer].weights;
        let g = &mut grads.layers[layer];
        let prev = if layer == 0 { &trace.input } else { &trace.act[layer - 1] };
        let mut prev_delta = vec![0.0; topo.inputs()];
        for (n, &d) in delta.iter().enumerate() {
            let sd = scale * d;
            g.biases[n] += sd;
            for (e, &s) in topo.edge_range(n).zip(topo.in_edges(n)) {
                g.weights[e] += sd * prev[s];
                if layer > 0 {
                    prev_delta[s] += w[e] * d;
                }
            }
        }
        if layer > 0 {
            // tanh'(z) = 1 - tanh(z)^2
            for (pd, a) in prev_delta.iter_mut().zip(prev) {
                *pd *= 1.0 - a * a;
            }
        }
        delta = prev_delta;
    }
}

/// Gradient of the full per-sample loss (data term plus L2 penalty) with
/// respect to every stored parameter.
pub fn backward(
    spec: &ConnectivitySpec,
    params: &NetworkParams,
    trace: &ForwardTrace,
    target: usize,
    loss: &LossConfig,
) -> Result<NetworkParams> {
    let k = spec.num_outputs();
    if target >= k {
        return Err(Error::LabelOutOfRange { label: target, classes: k });
    }
    if !params.matches(spec) || trace.probabilities().len() != k {
        return Err(Error::ShapeMismatch);
    }
    let mut grads = NetworkParams::zeros(spec);
    let delta = output_delta(trace.probabilities(), target, loss.kind);
    accumulate_gradient(spec, params, trace, delta, 1.0, &mut grads);
    add_l2_gradient(params, loss.reg_beta, &mut grads);
    Ok(grads)
}

/// [`backward`] with the loss kind given by name, as read from configs.
pub fn backward_named(
    spec: &ConnectivitySpec,
    params: &NetworkParams,
    trace: &ForwardTrace,
    target: usize,
    loss_kind: &str,
    reg_beta: f64,
) -> Result<NetworkParams> {
    let kind: LossKind = loss_kind.parse()?;
    backward(spec, params, trace, target, &LossConfig { kind, reg_beta })
}
