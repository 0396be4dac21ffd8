//! Flat run configuration. Keys are dotted (`train.epochs`) and mirror the
//! command-line flags; unknown keys are rejected.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{MarkerClass, SyntheticConfig, User};
use crate::error::{Error, Result};
use crate::optim::{AdamConfig, LossConfig, LossKind, LrSchedule};
use crate::preprocess::{BalanceMode, FitStatsOn, PrepareOptions};
use crate::structnet::{parse_region, Preset, XavierFans, REGIONS};
use crate::train::{BatchSize, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UserSelector {
    A,
    B,
    /// Both users' recordings pooled.
    Ab,
}

impl UserSelector {
    pub fn users(self) -> Vec<User> {
        match self {
            UserSelector::A => vec![User::A],
            UserSelector::B => vec![User::B],
            UserSelector::Ab => vec![User::A, User::B],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UserSelector::A => "a",
            UserSelector::B => "b",
            UserSelector::Ab => "ab",
        }
    }
}

impl FromStr for UserSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(UserSelector::A),
            "b" => Ok(UserSelector::B),
            "ab" | "both" => Ok(UserSelector::Ab),
            _ => Err(Error::Config(format!("unknown user selector {s:?}"))),
        }
    }
}

/// How many marker subsets a multiclass run trains on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComboPolicy {
    /// `sample(10)` for k < 9, every subset for k = 9.
    Default,
    All,
    Sample(usize),
}

impl FromStr for ComboPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "default" | "" => Ok(ComboPolicy::Default),
            "all" => Ok(ComboPolicy::All),
            _ => s
                .strip_prefix("sample:")
                .and_then(|n| n.parse().ok())
                .filter(|&n: &usize| n >= 1)
                .map(ComboPolicy::Sample)
                .ok_or_else(|| Error::Config(format!("invalid combination policy {s:?}"))),
        }
    }
}

fn parse_list<T>(text: &str, all: &[T]) -> Result<Vec<T>>
where
    T: FromStr<Err = Error> + Copy + Ord,
{
    let text = text.trim();
    if text == "all" {
        return Ok(all.to_vec());
    }
    let mut out = text.split(',').map(str::parse).collect::<Result<Vec<T>>>()?;
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(Error::Config("empty selection".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data_root: Option<PathBuf>,
    pub out: PathBuf,
    /// One marker, a comma list, or `all`.
    pub marker: String,
    /// `a`, `b`, `ab`, a comma list, or `all`.
    pub user: String,
    pub preset: Preset,
    pub seed: u64,
    pub jobs: usize,
    pub synthetic: bool,
    #[serde(rename = "synthetic.positives")]
    pub synthetic_positives: usize,
    #[serde(rename = "synthetic.negatives")]
    pub synthetic_negatives: usize,
    /// Comma list of region names or indices; empty means region `i` for
    /// the `i`-th marker.
    #[serde(rename = "synthetic.regions")]
    pub synthetic_regions: String,
    #[serde(rename = "synthetic.shift")]
    pub synthetic_shift: f64,
    #[serde(rename = "synthetic.placeholder_fraction")]
    pub synthetic_placeholder_fraction: f64,
    #[serde(rename = "train.epochs")]
    pub epochs: usize,
    #[serde(rename = "train.batch")]
    pub batch: BatchSize,
    #[serde(rename = "train.shuffle")]
    pub shuffle: bool,
    #[serde(rename = "loss.kind")]
    pub loss: LossKind,
    #[serde(rename = "loss.reg_beta")]
    pub reg_beta: f64,
    #[serde(rename = "schedule.initial_rate")]
    pub initial_rate: f64,
    #[serde(rename = "schedule.decay_ratio")]
    pub decay_ratio: f64,
    #[serde(rename = "schedule.decay_step")]
    pub decay_step: u64,
    #[serde(rename = "adam.beta1")]
    pub beta1: f64,
    #[serde(rename = "adam.beta2")]
    pub beta2: f64,
    #[serde(rename = "adam.epsilon")]
    pub epsilon: f64,
    #[serde(rename = "preprocess.test_fraction")]
    pub test_fraction: f64,
    #[serde(rename = "preprocess.balance")]
    pub balance: BalanceMode,
    #[serde(rename = "preprocess.fit_stats_on")]
    pub fit_stats_on: FitStatsOn,
    #[serde(rename = "init.xavier_fans")]
    pub xavier_fans: XavierFans,
    /// Marker-subset size for multiclass runs; none means binary.
    #[serde(rename = "multiclass.k")]
    pub multiclass: Option<usize>,
    #[serde(rename = "multiclass.combos")]
    pub combos: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let prep = PrepareOptions::default();
        Self {
            data_root: None,
            out: PathBuf::from("out"),
            marker: MarkerClass::Assertion.name().into(),
            user: "a".into(),
            preset: Preset::Structured,
            seed: 42,
            jobs: 1,
            synthetic: false,
            synthetic_positives: 200,
            synthetic_negatives: 200,
            synthetic_regions: String::new(),
            synthetic_shift: 1.0,
            synthetic_placeholder_fraction: 0.01,
            epochs: train.epochs,
            batch: train.batch_size,
            shuffle: train.shuffle_each_epoch,
            loss: train.loss.kind,
            reg_beta: train.loss.reg_beta,
            initial_rate: train.schedule.initial_rate,
            decay_ratio: train.schedule.decay_ratio,
            decay_step: train.schedule.decay_step,
            beta1: train.adam.beta1,
            beta2: train.adam.beta2,
            epsilon: train.adam.epsilon,
            test_fraction: prep.test_fraction,
            balance: prep.balance,
            fit_stats_on: prep.fit_stats_on,
            xavier_fans: train.xavier_fans,
            multiclass: None,
            combos: "default".into(),
        }
    }
}

impl RunConfig {
    /// Parses a config document. A full experiment report is accepted too;
    /// its `config` snapshot is used.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let value = match value.get("config") {
            Some(inner) if value.get("id").is_some() => inner.clone(),
            _ => value,
        };
        let config: RunConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch,
            seed,
            loss: LossConfig { kind: self.loss, reg_beta: self.reg_beta },
            schedule: LrSchedule {
                initial_rate: self.initial_rate,
                decay_ratio: self.decay_ratio,
                decay_step: self.decay_step,
            },
            adam: AdamConfig { beta1: self.beta1, beta2: self.beta2, epsilon: self.epsilon },
            shuffle_each_epoch: self.shuffle,
            xavier_fans: self.xavier_fans,
        }
    }

    pub fn prepare_options(&self) -> PrepareOptions {
        PrepareOptions { test_fraction: self.test_fraction, balance: self.balance, fit_stats_on: self.fit_stats_on }
    }

    pub fn markers(&self) -> Result<Vec<MarkerClass>> {
        parse_list(&self.marker, &MarkerClass::ALL)
    }

    pub fn users(&self) -> Result<Vec<UserSelector>> {
        parse_list(&self.user, &[UserSelector::A, UserSelector::B, UserSelector::Ab])
    }

    pub fn combo_policy(&self) -> Result<ComboPolicy> {
        self.combos.parse()
    }

    pub fn signal_regions(&self, marker: MarkerClass) -> Result<Vec<usize>> {
        if self.synthetic_regions.trim().is_empty() {
            return Ok(vec![marker.index() % REGIONS.len()]);
        }
        self.synthetic_regions
            .split(',')
            .map(|r| {
                parse_region(r)
                    .filter(|&i| i < REGIONS.len())
                    .ok_or_else(|| Error::Config(format!("unknown region {r:?}")))
            })
            .collect()
    }

    pub fn synthetic_config(&self, seed: u64, marker: MarkerClass, user: User) -> Result<SyntheticConfig> {
        Ok(SyntheticConfig {
            seed,
            positives: self.synthetic_positives,
            negatives: self.synthetic_negatives,
            signal_regions: self.signal_regions(marker)?,
            placeholder_fraction: self.synthetic_placeholder_fraction,
            shift: self.synthetic_shift,
            marker,
            user,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config(self.seed).validate()?;
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidFraction(self.test_fraction));
        }
        if !(0.0..=1.0).contains(&self.synthetic_placeholder_fraction) {
            return Err(Error::Config("synthetic.placeholder_fraction must be in [0, 1]".into()));
        }
        if !self.synthetic_shift.is_finite() {
            return Err(Error::Config("synthetic.shift must be finite".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be >= 1".into()));
        }
        if let Some(k) = self.multiclass {
            if ![3, 5, 7, 9].contains(&k) {
                return Err(Error::InvalidK(k));
            }
        }
        if !self.synthetic && self.data_root.is_none() {
            return Err(Error::Config("data_root is required unless synthetic is set".into()));
        }
        self.markers()?;
        self.users()?;
        self.combo_policy()?;
        for m in MarkerClass::ALL {
            self.signal_regions(m)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_published_hyperparameters() {
        let c = RunConfig::default();
        assert_eq!(c.initial_rate, 0.01);
        assert_eq!(c.decay_ratio, 0.9);
        assert_eq!(c.decay_step, 7000);
        assert_eq!(c.reg_beta, 0.05);
        assert_eq!(c.epochs, 750);
        assert_eq!(c.batch, BatchSize::Size(32));
        assert_eq!(c.test_fraction, 0.30);
    }

    #[test]
    fn dotted_keys_and_unknown_rejection() {
        let c = RunConfig::from_json(r#"{"synthetic": true, "train.epochs": 3, "train.batch": "all"}"#).unwrap();
        assert_eq!(c.epochs, 3);
        assert_eq!(c.batch, BatchSize::All);
        assert!(RunConfig::from_json(r#"{"synthetic": true, "train.epoch": 3}"#).is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let c = RunConfig { synthetic: true, seed: 9, ..Default::default() };
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
        let report = format!(r#"{{"id": "x", "config": {}}}"#, c.to_json());
        assert_eq!(RunConfig::from_json(&report).unwrap(), c);
    }

    #[test]
    fn selections() {
        let c = RunConfig { marker: "focus,assertion".into(), user: "all".into(), ..Default::default() };
        assert_eq!(c.markers().unwrap(), vec![MarkerClass::Assertion, MarkerClass::Focus]);
        assert_eq!(c.users().unwrap().len(), 3);
        assert_eq!("sample:5".parse::<ComboPolicy>().unwrap(), ComboPolicy::Sample(5));
        assert!("sample:0".parse::<ComboPolicy>().is_err());
    }

    #[test]
    fn region_override() {
        let mut c = RunConfig::default();
        assert_eq!(c.signal_regions(MarkerClass::Negative).unwrap(), vec![2]);
        c.synthetic_regions = "mouth,nose".into();
        assert_eq!(c.signal_regions(MarkerClass::Negative).unwrap(), vec![5, 4]);
        c.synthetic_regions = "12".into();
        assert!(c.signal_regions(MarkerClass::Negative).is_err());
    }

    #[test]
    fn requires_a_data_source() {
        assert!(RunConfig::default().validate().is_err());
        assert!(RunConfig { synthetic: true, ..Default::default() }.validate().is_ok());
        assert!(matches!(
            RunConfig { synthetic: true, multiclass: Some(4), ..Default::default() }.validate(),
            Err(Error::InvalidK(4))
        ));
    }
}
