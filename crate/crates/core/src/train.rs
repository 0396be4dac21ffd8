//! Mini-batch training loop and evaluation.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::optim::{adam_step, add_l2_gradient, data_loss, l2_penalty, output_delta, AdamConfig, AdamState, LossConfig, LrSchedule};
use crate::preprocess::PreparedSet;
use crate::seed::derive_seed;
use crate::structnet::network::accumulate_gradient;
use crate::structnet::{forward, xavier_init, ConnectivitySpec, NetworkParams, XavierFans};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSize {
    /// The whole training set per step.
    All,
    Size(usize),
}

impl BatchSize {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            BatchSize::All => n.max(1),
            BatchSize::Size(b) => b,
        }
    }
}

impl fmt::Display for BatchSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BatchSize::All => f.write_str("all"),
            BatchSize::Size(b) => write!(f, "{b}"),
        }
    }
}

impl FromStr for BatchSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(BatchSize::All),
            other => match other.parse::<usize>() {
                Ok(b) if b >= 1 => Ok(BatchSize::Size(b)),
                _ => Err(Error::Config(format!("batch size must be >= 1 or \"all\", got {s:?}"))),
            },
        }
    }
}

impl Serialize for BatchSize {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BatchSize::All => s.serialize_str("all"),
            BatchSize::Size(b) => s.serialize_u64(*b as u64),
        }
    }
}

impl<'de> Deserialize<'de> for BatchSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Num(n) => n.to_string(),
            Raw::Text(t) => t,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: BatchSize,
    pub seed: u64,
    pub loss: LossConfig,
    pub schedule: LrSchedule,
    pub adam: AdamConfig,
    pub shuffle_each_epoch: bool,
    pub xavier_fans: XavierFans,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 750,
            batch_size: BatchSize::Size(32),
            seed: 0,
            loss: LossConfig::default(),
            schedule: LrSchedule::default(),
            adam: AdamConfig::default(),
            shuffle_each_epoch: true,
            xavier_fans: XavierFans::Masked,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == BatchSize::Size(0) {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if !(0.0..).contains(&self.loss.reg_beta) {
            return Err(Error::Config("loss.reg_beta must be >= 0".into()));
        }
        self.schedule.validate()?;
        self.adam.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-sample loss (data term plus penalty) over the epoch.
    pub mean_loss: f64,
    /// Rate used by the epoch's last step.
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    pub history: Vec<EpochRecord>,
    pub steps: u64,
}

pub fn steps_per_epoch(n: usize, batch: BatchSize) -> usize {
    n.div_ceil(batch.resolve(n))
}

fn check_labels(spec: &ConnectivitySpec, set: &PreparedSet) -> Result<()> {
    let k = spec.num_outputs();
    match set.labels.iter().find(|&&l| l >= k) {
        Some(&label) => Err(Error::LabelOutOfRange { label, classes: k }),
        None => Ok(()),
    }
}

/// Trains from Glorot-initialized parameters.
pub fn train(spec: &ConnectivitySpec, set: &PreparedSet, config: &TrainConfig) -> Result<TrainOutcome> {
    let params = xavier_init(spec, derive_seed(config.seed, "init"), config.xavier_fans);
    train_from(spec, set, config, params)
}

/// Runs `epochs * ceil(n / batch)` Adam steps starting at `params`.
pub fn train_from(
    spec: &ConnectivitySpec,
    set: &PreparedSet,
    config: &TrainConfig,
    mut params: NetworkParams,
) -> Result<TrainOutcome> {
    config.validate()?;
    if set.is_empty() {
        return Err(Error::TooFewSamples(0));
    }
    check_labels(spec, set)?;
    if !params.matches(spec) {
        return Err(Error::ShapeMismatch);
    }
    let n = set.len();
    let batch = config.batch_size.resolve(n);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "shuffle"));
    let mut order: Vec<usize> = (0..n).collect();
    let mut state = AdamState::new(&params, config.adam);
    let mut grads = NetworkParams::zeros(spec);
    let mut history = Vec::with_capacity(config.epochs);
    let mut step: u64 = 0;

    for epoch in 0..config.epochs {
        if config.shuffle_each_epoch {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        let mut lr = config.schedule.lr_at(step);
        for chunk in order.chunks(batch) {
            grads.fill(0.0);
            let scale = 1.0 / chunk.len() as f64;
            let penalty = l2_penalty(&params, config.loss.reg_beta);
            for &i in chunk {
                let trace = forward(spec, &params, &set.features[i])?;
                let target = set.labels[i];
                loss_sum += data_loss(trace.probabilities(), target, config.loss.kind) + penalty;
                let delta = output_delta(trace.probabilities(), target, config.loss.kind);
                accumulate_gradient(spec, &params, &trace, delta, scale, &mut grads);
            }
            add_l2_gradient(&params, config.loss.reg_beta, &mut grads);
            lr = config.schedule.lr_at(step);
            adam_step(&mut state, &mut params, &grads, lr)?;
            step += 1;
        }
        history.push(EpochRecord { epoch: epoch + 1, mean_loss: loss_sum / n as f64, lr });
    }
    Ok(TrainOutcome { params, history, steps: step })
}

pub fn predict(spec: &ConnectivitySpec, params: &NetworkParams, features: &[f64]) -> Result<usize> {
    Ok(forward(spec, params, features)?.predicted())
}

/// Argmax predictions (ties to the lowest class) scored against the labels.
pub fn evaluate(spec: &ConnectivitySpec, params: &NetworkParams, set: &PreparedSet) -> Result<Metrics> {
    if set.is_empty() {
        return Err(Error::TooFewSamples(0));
    }
    check_labels(spec, set)?;
    let predicted = set
        .features
        .iter()
        .map(|x| predict(spec, params, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(Metrics::from_predictions(&set.labels, &predicted, spec.num_outputs()))
}

/// Writes the per-epoch history as `epoch,mean_loss,lr` CSV.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,mean_loss,lr\n");
    for r in history {
        out.push_str(&format!("{},{},{}\n", r.epoch, r.mean_loss, r.lr));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structnet::build_structured_spec;

    fn tiny_set(n: usize) -> PreparedSet {
        let features = (0..n)
            .map(|i| (0..300).map(|j| ((i * 7 + j) as f64 * 0.1).sin()).collect())
            .collect();
        PreparedSet { features, labels: (0..n).map(|i| i % 2).collect(), ids: (0..n).collect() }
    }

    #[test]
    fn step_count_contract() {
        let spec = build_structured_spec(2).unwrap();
        let set = tiny_set(10);
        let cfg = TrainConfig { epochs: 1, batch_size: BatchSize::All, ..Default::default() };
        let out = train(&spec, &set, &cfg).unwrap();
        assert_eq!(out.steps, 1);
        assert_eq!(out.history.len(), 1);
        let cfg = TrainConfig { epochs: 3, batch_size: BatchSize::Size(4), ..Default::default() };
        assert_eq!(train(&spec, &set, &cfg).unwrap().steps, 9);
        assert_eq!(steps_per_epoch(10, BatchSize::Size(4)), 3);
    }

    #[test]
    fn zero_epochs_rejected() {
        let spec = build_structured_spec(2).unwrap();
        let cfg = TrainConfig { epochs: 0, ..Default::default() };
        assert!(matches!(train(&spec, &tiny_set(4), &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn label_out_of_range() {
        let spec = build_structured_spec(2).unwrap();
        let mut set = tiny_set(4);
        set.labels[2] = 2;
        let cfg = TrainConfig { epochs: 1, ..Default::default() };
        assert!(matches!(train(&spec, &set, &cfg), Err(Error::LabelOutOfRange { label: 2, classes: 2 })));
    }

    #[test]
    fn deterministic() {
        let spec = build_structured_spec(2).unwrap();
        let cfg = TrainConfig { epochs: 3, batch_size: BatchSize::Size(3), seed: 5, ..Default::default() };
        let a = train(&spec, &tiny_set(12), &cfg).unwrap();
        let b = train(&spec, &tiny_set(12), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_classifier_takes_lowest_class() {
        let spec = build_structured_spec(2).unwrap();
        let params = NetworkParams::zeros(&spec);
        let m = evaluate(&spec, &params, &tiny_set(10)).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.confusion, vec![vec![5, 0], vec![5, 0]]);
    }

    #[test]
    fn batch_size_parsing() {
        assert_eq!("all".parse::<BatchSize>().unwrap(), BatchSize::All);
        assert_eq!("32".parse::<BatchSize>().unwrap(), BatchSize::Size(32));
        assert!("0".parse::<BatchSize>().is_err());
        let json = serde_json::to_string(&BatchSize::Size(8)).unwrap();
        assert_eq!(json, "8");
        assert_eq!(serde_json::from_str::<BatchSize>("\"all\"").unwrap(), BatchSize::All);
    }

    #[test]
    fn history_csv_layout() {
        let csv = history_csv(&[EpochRecord { epoch: 1, mean_loss: 0.5, lr: 0.01 }]);
        assert_eq!(csv, "epoch,mean_loss,lr\n1,0.5,0.01\n");
    }
}
