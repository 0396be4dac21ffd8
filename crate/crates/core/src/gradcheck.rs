//! Central finite-difference check of the analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dataset::NUM_COORDS;
use crate::error::Result;
use crate::optim::{add_l2_gradient, compute_loss, l2_penalty, LossConfig, LossKind};
use crate::seed::derive_seed;
use crate::structnet::{backward, build_spec, forward, xavier_init, ConnectivitySpec, NetworkParams, Preset, XavierFans};

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-6;
/// Denominator floor for the relative error. Central differences of an
/// O(1) loss carry about 1e-11 of rounding noise, so gradients smaller than
/// this are compared on an absolute scale.
pub const REL_FLOOR: f64 = 1e-4;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheck {
    pub label: String,
    pub params: usize,
    pub max_relative_error: f64,
    pub worst_param: usize,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        self.max_relative_error < TOLERANCE
    }
}

fn loss_at(spec: &ConnectivitySpec, params: &NetworkParams, x: &[f64], target: usize, loss: &LossConfig) -> Result<f64> {
    let trace = forward(spec, params, x)?;
    Ok(compute_loss(trace.probabilities(), target, params, loss))
}

/// Compares `analytic` with central differences of the loss over every
/// parameter.
pub fn check_gradient(
    spec: &ConnectivitySpec,
    params: &NetworkParams,
    analytic: &NetworkParams,
    x: &[f64],
    target: usize,
    loss: &LossConfig,
) -> Result<(f64, usize)> {
    let mut probe = params.clone();
    let analytic: Vec<f64> = analytic.values().copied().collect();
    let mut worst = (0.0, 0);
    for (i, &a) in analytic.iter().enumerate() {
        let original = *probe.value_mut(i);
        *probe.value_mut(i) = original + STEP;
        let up = loss_at(spec, &probe, x, target, loss)?;
        *probe.value_mut(i) = original - STEP;
        let down = loss_at(spec, &probe, x, target, loss)?;
        *probe.value_mut(i) = original;
        let numeric = (up - down) / (2.0 * STEP);
        let err = relative_error(a, numeric);
        if err > worst.0 {
            worst = (err, i);
        }
    }
    Ok(worst)
}

/// Glorot weights plus small random biases, so bias gradients are exercised
/// away from zero.
pub fn random_params(spec: &ConnectivitySpec, seed: u64) -> NetworkParams {
    let mut params = xavier_init(spec, seed, XavierFans::Masked);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "biases"));
    for layer in &mut params.layers {
        for b in &mut layer.biases {
            *b = rng.gen_range(-0.5..0.5);
        }
    }
    params
}

pub fn random_input(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..NUM_COORDS).map(|_| rng.sample(StandardNormal)).collect()
}

/// Networks covered by the standard sweep.
pub const SWEEP: [(Preset, usize); 4] =
    [(Preset::Structured, 2), (Preset::Structured, 9), (Preset::FullyConnected, 2), (Preset::Structured, 5)];

/// Compares the analytic L2 gradient with central differences of the
/// penalty. The penalty is a sum of independent per-weight terms, so each
/// coordinate is differenced with every other entry zeroed; the remaining
/// terms are constant and would only add rounding noise.
pub fn check_l2_gradient(params: &NetworkParams, reg_beta: f64) -> (f64, usize) {
    let mut analytic = params.clone();
    analytic.fill(0.0);
    add_l2_gradient(params, reg_beta, &mut analytic);
    let analytic: Vec<f64> = analytic.values().copied().collect();
    let originals: Vec<f64> = params.values().copied().collect();
    let mut probe = params.clone();
    probe.fill(0.0);
    let mut worst = (0.0, 0);
    for (i, (&a, &original)) in analytic.iter().zip(&originals).enumerate() {
        *probe.value_mut(i) = original + STEP;
        let up = l2_penalty(&probe, reg_beta);
        *probe.value_mut(i) = original - STEP;
        let down = l2_penalty(&probe, reg_beta);
        *probe.value_mut(i) = 0.0;
        let err = relative_error(a, (up - down) / (2.0 * STEP));
        if err > worst.0 {
            worst = (err, i);
        }
    }
    worst
}

/// Checks every network of [`SWEEP`]: the data-loss gradient of both loss
/// kinds, then the L2 penalty gradient at `reg_beta`. The two are checked
/// apart because a large penalty value swamps the data term's finite
/// differences with rounding noise. `corrupt` perturbs one analytic entry
/// and must make the sweep fail.
pub fn gradcheck_sweep(seed: u64, reg_beta: f64, corrupt: bool) -> Result<Vec<GradCheck>> {
    let mut out = Vec::new();
    for (preset, k) in SWEEP {
        let spec = build_spec(preset, k)?;
        let id = format!("{}/{k}", preset.name());
        let params = random_params(&spec, derive_seed(seed, &id));
        let x = random_input(derive_seed(seed, &format!("{id}/input")));
        let target = (derive_seed(seed, &format!("{id}/target")) % k as u64) as usize;
        for kind in [LossKind::CrossEntropy, LossKind::Mse] {
            let loss = LossConfig { kind, reg_beta: 0.0 };
            let trace = forward(&spec, &params, &x)?;
            let mut analytic = backward(&spec, &params, &trace, target, &loss)?;
            if corrupt {
                analytic.layers[0].weights[0] += 1e-3;
            }
            let (max_relative_error, worst_param) = check_gradient(&spec, &params, &analytic, &x, target, &loss)?;
            out.push(GradCheck {
                label: format!("{id} {kind}"),
                params: analytic.len(),
                max_relative_error,
                worst_param,
            });
        }
        let (max_relative_error, worst_param) = check_l2_gradient(&params, reg_beta);
        out.push(GradCheck { label: format!("{id} l2"), params: params.len(), max_relative_error, worst_param });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_gradients_match_finite_differences() {
        let spec = build_spec(Preset::Structured, 3).unwrap();
        let params = random_params(&spec, 1);
        let x = random_input(2);
        for kind in [LossKind::CrossEntropy, LossKind::Mse] {
            let loss = LossConfig { kind, reg_beta: 0.0 };
            let trace = forward(&spec, &params, &x).unwrap();
            let g = backward(&spec, &params, &trace, 2, &loss).unwrap();
            let (err, _) = check_gradient(&spec, &params, &g, &x, 2, &loss).unwrap();
            assert!(err < TOLERANCE, "{kind}: {err}");
        }
        assert!(check_l2_gradient(&params, 0.05).0 < TOLERANCE);
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let spec = build_spec(Preset::Structured, 2).unwrap();
        let params = random_params(&spec, 1);
        let x = random_input(2);
        let loss = LossConfig::cross_entropy(0.0);
        let trace = forward(&spec, &params, &x).unwrap();
        let mut g = backward(&spec, &params, &trace, 0, &loss).unwrap();
        g.layers[1].biases[3] += 1e-3;
        let (err, worst) = check_gradient(&spec, &params, &g, &x, 0, &loss).unwrap();
        assert!(err > TOLERANCE);
        assert_eq!(worst, 300 + 100 + 100 + 3);
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(1.0, 1.0), 0.0);
        assert!((relative_error(2.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((relative_error(1e-9, 0.0) - 1e-5).abs() < 1e-15);
    }
}
