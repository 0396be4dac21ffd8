//! Placeholder imputation, z-score standardization, class balancing and the
//! stratified train/test split.

use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{LandmarkFrame, MarkerDataset, NUM_COORDS};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Standard deviations below this are treated as zero and replaced by 1.0.
pub const STD_EPSILON: f64 = 1e-12;

impl AsRef<[f64]> for LandmarkFrame {
    fn as_ref(&self) -> &[f64] {
        self.coords()
    }
}

/// Frames with class indices. `ids` holds each sample's position in the
/// set it was first built from, so subsets stay traceable.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub frames: Vec<LandmarkFrame>,
    pub labels: Vec<usize>,
    pub ids: Vec<usize>,
}

impl LabeledSet {
    pub fn new(frames: Vec<LandmarkFrame>, labels: Vec<usize>) -> Result<Self> {
        if frames.len() != labels.len() {
            return Err(Error::LengthMismatch(frames.len(), labels.len()));
        }
        let ids = (0..frames.len()).collect();
        Ok(Self { frames, labels, ids })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn class_counts(&self, num_classes: usize) -> Vec<usize> {
        let mut counts = vec![0; num_classes];
        for &l in &self.labels {
            if l < num_classes {
                counts[l] += 1;
            }
        }
        counts
    }

    fn select(&self, indices: &[usize]) -> Self {
        Self {
            frames: indices.iter().map(|&i| self.frames[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i]).collect(),
        }
    }

    fn indices_by_class(&self, num_classes: usize) -> Result<Vec<Vec<usize>>> {
        let mut by_class = vec![Vec::new(); num_classes];
        for (i, &l) in self.labels.iter().enumerate() {
            by_class
                .get_mut(l)
                .ok_or(Error::LabelOutOfRange { label: l, classes: num_classes })?
                .push(i);
        }
        Ok(by_class)
    }
}

impl From<MarkerDataset> for LabeledSet {
    fn from(ds: MarkerDataset) -> Self {
        let (frames, labels) = ds.into_parts();
        let labels = labels.into_iter().map(usize::from).collect();
        LabeledSet::new(frames, labels).expect("dataset invariants hold")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImputationReport {
    /// Placeholders replaced in each of the 300 columns.
    pub replaced: Vec<usize>,
    /// Columns holding nothing but placeholders; left untouched.
    pub all_placeholder: Vec<usize>,
}

impl ImputationReport {
    pub fn total_replaced(&self) -> usize {
        self.replaced.iter().sum()
    }
}

/// Replaces every exact 0.0 with the mean of the column's other entries.
pub fn impute_missing(frames: &[LandmarkFrame]) -> (Vec<LandmarkFrame>, ImputationReport) {
    let cols = frames.first().map_or(NUM_COORDS, |f| f.coords().len());
    let mut sums = vec![0.0; cols];
    let mut present = vec![0usize; cols];
    for frame in frames {
        for (j, &v) in frame.coords().iter().enumerate() {
            if v != 0.0 {
                sums[j] += v;
                present[j] += 1;
            }
        }
    }
    let means: Vec<Option<f64>> =
        sums.iter().zip(&present).map(|(&s, &n)| (n > 0).then(|| s / n as f64)).collect();

    let mut replaced = vec![0usize; cols];
    let mut out = frames.to_vec();
    for frame in &mut out {
        for (j, v) in frame.coords_mut().iter_mut().enumerate() {
            if *v == 0.0 {
                if let Some(mean) = means[j] {
                    *v = mean;
                    replaced[j] += 1;
                }
            }
        }
    }
    let all_placeholder = if frames.is_empty() {
        Vec::new()
    } else {
        (0..cols).filter(|&j| present[j] == 0).collect()
    };
    (out, ImputationReport { replaced, all_placeholder })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub means: Vec<f64>,
    /// Population standard deviations, before guarding.
    pub stds: Vec<f64>,
}

impl StandardizationStats {
    /// Divisor actually used for column `j`.
    pub fn divisor(&self, j: usize) -> f64 {
        if self.stds[j] < STD_EPSILON {
            1.0
        } else {
            self.stds[j]
        }
    }

    pub fn guarded_columns(&self) -> Vec<usize> {
        (0..self.stds.len()).filter(|&j| self.stds[j] < STD_EPSILON).collect()
    }
}

/// Per-column mean and population standard deviation.
pub fn fit_standardizer<R: AsRef<[f64]>>(rows: &[R]) -> Result<StandardizationStats> {
    if rows.len() < 2 {
        return Err(Error::TooFewSamples(rows.len()));
    }
    let cols = rows[0].as_ref().len();
    let n = rows.len() as f64;
    let mut means = vec![0.0; cols];
    for row in rows {
        for (m, v) in means.iter_mut().zip(row.as_ref()) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut vars = vec![0.0; cols];
    for row in rows {
        for ((s, v), m) in vars.iter_mut().zip(row.as_ref()).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let stds = vars.into_iter().map(|s| (s / n).sqrt()).collect();
    Ok(StandardizationStats { means, stds })
}

pub fn apply_standardizer<R: AsRef<[f64]>>(stats: &StandardizationStats, rows: &[R]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|row| {
            row.as_ref()
                .iter()
                .enumerate()
                .map(|(j, v)| (v - stats.means[j]) / stats.divisor(j))
                .collect()
        })
        .collect()
}

/// Downsamples every class, without replacement, to the smallest class
/// count and shuffles the result.
pub fn balance_classes(set: &LabeledSet, num_classes: usize, seed: u64) -> Result<LabeledSet> {
    let mut by_class = set.indices_by_class(num_classes)?;
    if let Some(empty) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::MissingClass(empty));
    }
    let target = by_class.iter().map(Vec::len).min().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::with_capacity(target * num_classes);
    for indices in &mut by_class {
        indices.shuffle(&mut rng);
        keep.extend_from_slice(&indices[..target]);
    }
    keep.shuffle(&mut rng);
    Ok(set.select(&keep))
}

/// Stratified split: each class sends `round(count * test_fraction)` of its
/// samples to the test side.
pub fn split_train_test(
    set: &LabeledSet,
    num_classes: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledSet, LabeledSet)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidFraction(test_fraction));
    }
    let mut by_class = set.indices_by_class(num_classes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for indices in &mut by_class {
        indices.shuffle(&mut rng);
        let n_test = (indices.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&indices[..n_test]);
        train.extend_from_slice(&indices[n_test..]);
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((set.select(&train), set.select(&test)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceMode {
    /// Balance the whole set, then split; both sides end up balanced.
    #[default]
    BeforeSplit,
    /// Split first, then balance only the training side.
    AfterSplit,
    Off,
}

impl FromStr for BalanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "before-split" | "before" => Ok(BalanceMode::BeforeSplit),
            "after-split" | "after" => Ok(BalanceMode::AfterSplit),
            "off" | "none" => Ok(BalanceMode::Off),
            _ => Err(Error::Config(format!("unknown balance mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatsOn {
    #[default]
    Train,
    All,
}

impl FromStr for FitStatsOn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(FitStatsOn::Train),
            "all" => Ok(FitStatsOn::All),
            _ => Err(Error::Config(format!("unknown fit-stats-on value {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepareOptions {
    pub test_fraction: f64,
    pub balance: BalanceMode,
    pub fit_stats_on: FitStatsOn,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        Self { test_fraction: 0.30, balance: BalanceMode::BeforeSplit, fit_stats_on: FitStatsOn::Train }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub imputation: ImputationReport,
    pub class_counts_raw: Vec<usize>,
    pub balance: BalanceMode,
    pub balance_seed: u64,
    pub split_seed: u64,
    pub test_fraction: f64,
    pub fit_stats_on: FitStatsOn,
    pub guarded_columns: Vec<usize>,
    pub train_class_counts: Vec<usize>,
    pub test_class_counts: Vec<usize>,
}

/// Model-ready rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub ids: Vec<usize>,
}

impl PreparedSet {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSplit {
    pub train: PreparedSet,
    pub test: PreparedSet,
    pub stats: StandardizationStats,
    pub provenance: Provenance,
}

/// impute -> balance -> split -> fit stats -> standardize both sides.
pub fn prepare(set: &LabeledSet, num_classes: usize, options: &PrepareOptions, seed: u64) -> Result<PreparedSplit> {
    let class_counts_raw = set.class_counts(num_classes);
    let (frames, imputation) = impute_missing(&set.frames);
    let imputed = LabeledSet { frames, labels: set.labels.clone(), ids: set.ids.clone() };

    let balance_seed = derive_seed(seed, "balance");
    let split_seed = derive_seed(seed, "split");
    let (train, test) = match options.balance {
        BalanceMode::BeforeSplit => {
            let balanced = balance_classes(&imputed, num_classes, balance_seed)?;
            split_train_test(&balanced, num_classes, options.test_fraction, split_seed)?
        }
        BalanceMode::AfterSplit => {
            let (train, test) = split_train_test(&imputed, num_classes, options.test_fraction, split_seed)?;
            (balance_classes(&train, num_classes, balance_seed)?, test)
        }
        BalanceMode::Off => split_train_test(&imputed, num_classes, options.test_fraction, split_seed)?,
    };

    let stats = match options.fit_stats_on {
        FitStatsOn::Train => fit_standardizer(&train.frames)?,
        FitStatsOn::All => {
            let all: Vec<&[f64]> = train.frames.iter().chain(&test.frames).map(|f| f.coords()).collect();
            fit_standardizer(&all)?
        }
    };
    let provenance = Provenance {
        imputation,
        class_counts_raw,
        balance: options.balance,
        balance_seed,
        split_seed,
        test_fraction: options.test_fraction,
        fit_stats_on: options.fit_stats_on,
        guarded_columns: stats.guarded_columns(),
        train_class_counts: train.class_counts(num_classes),
        test_class_counts: test.class_counts(num_classes),
    };
    let to_prepared = |s: LabeledSet| PreparedSet {
        features: apply_standardizer(&stats, &s.frames),
        labels: s.labels,
        ids: s.ids,
    };
    Ok(PreparedSplit { train: to_prepared(train), test: to_prepared(test), stats, provenance })
}
