//! Binary, multiclass and baseline experiment protocols.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ComboPolicy, RunConfig, UserSelector};
use crate::dataset::{dataset_files, generate_synthetic, LandmarkFrame, MarkerClass, MarkerDataset, User};
use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::preprocess::{prepare, BalanceMode, LabeledSet, PrepareOptions, Provenance};
use crate::reference::{compare_cells, Deviation, ReferenceTables};
use crate::seed::derive_seed;
use crate::structnet::{build_spec, param_count, Model, Preset};
use crate::train::{evaluate, train, EpochRecord};

/// Sizes of marker subsets used by multiclass runs.
pub const MULTICLASS_SIZES: [usize; 4] = [3, 5, 7, 9];
const DEFAULT_SAMPLED_COMBOS: usize = 10;
/// Expected positives per marker per user in multiclass pools.
pub const EXPECTED_POOL: (usize, usize) = (200, 225);

/// Wall-clock timer. `wasm32-unknown-unknown` has no clock, so it reads 0 there.
struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        Stopwatch(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn secs(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Binary,
    Multiclass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub id: String,
    pub kind: ExperimentKind,
    pub markers: Vec<MarkerClass>,
    pub user: UserSelector,
    pub preset: Preset,
    pub param_count: usize,
    /// Enough to replay this run bit for bit.
    pub config: RunConfig,
    pub data_seed: u64,
    pub train_seed: u64,
    pub data_source: String,
    pub steps: u64,
    pub history: Vec<EpochRecord>,
    pub train_metrics: Metrics,
    pub test_metrics: Metrics,
    pub duration_secs: f64,
    pub provenance: Provenance,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn test_accuracy_pct(&self) -> f64 {
        100.0 * self.test_metrics.accuracy
    }

    /// Reference-table cells this run reproduces, with reproduced values
    /// in the table's units.
    pub fn reference_cells(&self) -> Vec<(String, f64)> {
        let mut cells = Vec::new();
        match self.kind {
            ExperimentKind::Binary => {
                let marker = self.markers[0].name();
                cells.push((
                    format!("binary_accuracy.{}.{}.{}", self.preset.name(), self.user.name(), marker),
                    self.test_accuracy_pct(),
                ));
                if self.preset == Preset::Structured && self.user == UserSelector::A {
                    let pos = self.test_metrics.positive();
                    for (name, v) in [("f_score", pos.f_score), ("precision", pos.precision), ("recall", pos.recall)] {
                        cells.push((format!("binary_prf.structured.{marker}.{name}"), v));
                    }
                }
            }
            ExperimentKind::Multiclass => {}
        }
        cells
    }
}

pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub model: Model,
}

/// Per-cell deviations of a report from the published tables.
pub fn compare_with_reference(report: &ExperimentReport, tables: &ReferenceTables) -> Result<Vec<Deviation>> {
    compare_cells(tables, &report.reference_cells())
}

/// The synthetic stand-in for one marker/user file pair under `config`.
pub fn synthetic_marker_dataset(config: &RunConfig, marker: MarkerClass, user: User) -> Result<MarkerDataset> {
    let seed = derive_seed(config.seed, &format!("synthetic/{}/{}", user.name(), marker.name()));
    generate_synthetic(&config.synthetic_config(seed, marker, user)?)
}

fn load_one(config: &RunConfig, marker: MarkerClass, user: User) -> Result<MarkerDataset> {
    if config.synthetic {
        return synthetic_marker_dataset(config, marker, user);
    }
    let root = config
        .data_root
        .as_deref()
        .ok_or_else(|| Error::Config("data_root is required unless synthetic is set".into()))?;
    dataset_files(root, user, marker)?.load()
}

/// All frames of `marker` for the selected user(s), labels 0/1.
pub fn load_binary_set(config: &RunConfig, marker: MarkerClass, user: UserSelector) -> Result<LabeledSet> {
    let mut frames = Vec::new();
    let mut labels = Vec::new();
    for u in user.users() {
        let (f, l) = load_one(config, marker, u)?.into_parts();
        frames.extend(f);
        labels.extend(l.into_iter().map(usize::from));
    }
    LabeledSet::new(frames, labels)
}

fn data_source(config: &RunConfig) -> String {
    match (&config.data_root, config.synthetic) {
        (_, true) => "synthetic".into(),
        (Some(root), false) => root.display().to_string(),
        (None, false) => "unknown".into(),
    }
}

struct Protocol<'a> {
    id: String,
    data_id: String,
    kind: ExperimentKind,
    markers: Vec<MarkerClass>,
    user: UserSelector,
    preset: Preset,
    num_classes: usize,
    options: PrepareOptions,
    snapshot: RunConfig,
    set: LabeledSet,
    warnings: Vec<String>,
    config: &'a RunConfig,
}

fn run_protocol(p: Protocol<'_>) -> Result<ExperimentOutcome> {
    let start = Stopwatch::start();
    let data_seed = derive_seed(p.config.seed, &p.data_id);
    // shared with the other preset so paired runs differ only in topology
    let train_seed = derive_seed(p.config.seed, &format!("train/{}", p.data_id));
    let split = prepare(&p.set, p.num_classes, &p.options, data_seed)?;
    let spec = build_spec(p.preset, p.num_classes)?;
    let train_cfg = p.config.train_config(train_seed);
    let outcome = train(&spec, &split.train, &train_cfg)?;
    let train_metrics = evaluate(&spec, &outcome.params, &split.train)?;
    let test_metrics = evaluate(&spec, &outcome.params, &split.test)?;
    let mut warnings = p.warnings;
    if !split.provenance.imputation.all_placeholder.is_empty() {
        warnings.push(format!(
            "{} columns contain only placeholders",
            split.provenance.imputation.all_placeholder.len()
        ));
    }
    let report = ExperimentReport {
        id: p.id,
        kind: p.kind,
        markers: p.markers,
        user: p.user,
        preset: p.preset,
        param_count: param_count(&spec),
        config: p.snapshot,
        data_seed,
        train_seed,
        data_source: data_source(p.config),
        steps: outcome.steps,
        history: outcome.history,
        train_metrics,
        test_metrics,
        duration_secs: start.secs(),
        provenance: split.provenance,
        warnings,
    };
    Ok(ExperimentOutcome { report, model: Model { spec, params: outcome.params, seed: train_seed } })
}

pub fn binary_experiment_id(marker: MarkerClass, user: UserSelector, preset: Preset) -> String {
    format!("binary/{}/{}/{}", user.name(), marker.name(), preset.name())
}

/// load -> impute -> balance -> split -> standardize -> train -> evaluate,
/// with two output classes.
pub fn run_binary_experiment(
    marker: MarkerClass,
    user: UserSelector,
    preset: Preset,
    config: &RunConfig,
) -> Result<ExperimentOutcome> {
    let set = load_binary_set(config, marker, user)?;
    let snapshot = RunConfig {
        marker: marker.name().into(),
        user: user.name().into(),
        preset,
        multiclass: None,
        ..config.clone()
    };
    run_protocol(Protocol {
        id: binary_experiment_id(marker, user, preset),
        data_id: format!("data/binary/{}/{}", user.name(), marker.name()),
        kind: ExperimentKind::Binary,
        markers: vec![marker],
        user,
        preset,
        num_classes: 2,
        options: config.prepare_options(),
        snapshot,
        set,
        warnings: Vec::new(),
        config,
    })
}

/// Every k-subset of the nine markers, in lexicographic order.
pub fn marker_combinations(k: usize) -> Vec<Vec<MarkerClass>> {
    fn rec(start: usize, k: usize, cur: &mut Vec<MarkerClass>, out: &mut Vec<Vec<MarkerClass>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..MarkerClass::ALL.len() {
            cur.push(MarkerClass::ALL[i]);
            rec(i + 1, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, &mut Vec::new(), &mut out);
    out
}

/// Subsets to train on under `policy`, in canonical order.
pub fn select_combinations(k: usize, policy: ComboPolicy, seed: u64) -> Result<Vec<Vec<MarkerClass>>> {
    if !MULTICLASS_SIZES.contains(&k) {
        return Err(Error::InvalidK(k));
    }
    let all = marker_combinations(k);
    let take = match policy {
        ComboPolicy::All => return Ok(all),
        ComboPolicy::Default if k == 9 => return Ok(all),
        ComboPolicy::Default => DEFAULT_SAMPLED_COMBOS,
        ComboPolicy::Sample(n) => n,
    };
    let mut idx: Vec<usize> = (0..all.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut chosen: Vec<usize> = idx.into_iter().take(take).collect();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| all[i].clone()).collect())
}

pub fn multiclass_experiment_id(markers: &[MarkerClass], user: UserSelector, preset: Preset) -> String {
    let names: Vec<&str> = markers.iter().map(|m| m.name()).collect();
    format!("multiclass/{}/{}/{}/{}", markers.len(), user.name(), names.join("+"), preset.name())
}

/// One marker subset: each marker's positive frames become one class.
pub fn run_multiclass_combination(
    markers: &[MarkerClass],
    user: UserSelector,
    config: &RunConfig,
) -> Result<ExperimentOutcome> {
    let k = markers.len();
    if !MULTICLASS_SIZES.contains(&k) {
        return Err(Error::InvalidK(k));
    }
    let mut frames: Vec<LandmarkFrame> = Vec::new();
    let mut labels = Vec::new();
    let mut warnings = Vec::new();
    for (class, &marker) in markers.iter().enumerate() {
        for u in user.users() {
            let ds = load_one(config, marker, u)?;
            let before = frames.len();
            for (f, &l) in ds.frames().iter().zip(ds.labels()) {
                if l == 1 {
                    frames.push(f.clone());
                    labels.push(class);
                }
            }
            let pooled = frames.len() - before;
            if !(EXPECTED_POOL.0..=EXPECTED_POOL.1).contains(&pooled) {
                warnings.push(format!(
                    "{}/{}: {pooled} positive frames pooled, expected about {}-{}",
                    u.name(),
                    marker.name(),
                    EXPECTED_POOL.0,
                    EXPECTED_POOL.1
                ));
            }
        }
    }
    let names: Vec<&str> = markers.iter().map(|m| m.name()).collect();
    let snapshot = RunConfig {
        marker: names.join(","),
        user: user.name().into(),
        multiclass: Some(k),
        ..config.clone()
    };
    let options = PrepareOptions { balance: BalanceMode::Off, ..config.prepare_options() };
    run_protocol(Protocol {
        id: multiclass_experiment_id(markers, user, config.preset),
        data_id: format!("data/multiclass/{}/{}", user.name(), names.join("+")),
        kind: ExperimentKind::Multiclass,
        markers: markers.to_vec(),
        user,
        preset: config.preset,
        num_classes: k,
        options,
        snapshot,
        set: LabeledSet::new(frames, labels)?,
        warnings,
        config,
    })
}

/// Re-runs the single experiment described by a report's config snapshot.
pub fn replay_experiment(snapshot: &RunConfig) -> Result<ExperimentOutcome> {
    snapshot.validate()?;
    let markers = snapshot.markers()?;
    let users = snapshot.users()?;
    let [user] = users[..] else {
        return Err(Error::Config("a snapshot names exactly one user selector".into()));
    };
    match snapshot.multiclass {
        Some(_) => {
            // snapshot order is class order; parse_list sorts, so re-read it
            let ordered = snapshot
                .marker
                .split(',')
                .map(str::parse)
                .collect::<Result<Vec<MarkerClass>>>()?;
            run_multiclass_combination(&ordered, user, snapshot)
        }
        None => match markers[..] {
            [marker] => run_binary_experiment(marker, user, snapshot.preset, snapshot),
            _ => Err(Error::Config("a binary snapshot names exactly one marker".into())),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassReport {
    pub k: usize,
    pub user: UserSelector,
    pub combinations: Vec<ExperimentReport>,
    /// Mean test accuracy over the combinations, percent.
    pub mean_test_accuracy_pct: f64,
}

impl MulticlassReport {
    pub fn reference_key(&self) -> String {
        format!("multiclass_accuracy.{}.{}", self.user.name(), self.k)
    }
}

pub fn run_multiclass_experiment(
    k: usize,
    user: UserSelector,
    policy: ComboPolicy,
    config: &RunConfig,
) -> Result<MulticlassReport> {
    let combos = select_combinations(k, policy, derive_seed(config.seed, &format!("combos/{k}/{}", user.name())))?;
    let results = run_pool(config.jobs, &combos, |c| run_multiclass_combination(c, user, config).map(|o| o.report))?;
    Ok(summarize_multiclass(k, user, results))
}

pub fn summarize_multiclass(k: usize, user: UserSelector, combinations: Vec<ExperimentReport>) -> MulticlassReport {
    let mean = combinations.iter().map(ExperimentReport::test_accuracy_pct).sum::<f64>()
        / combinations.len().max(1) as f64;
    MulticlassReport { k, user, combinations, mean_test_accuracy_pct: mean }
}

/// Two readings of an "overall mean" over binary accuracy cells, percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyMeans {
    pub preset: Preset,
    /// Mean of every marker/user cell.
    pub grand_mean: f64,
    /// Per user selector: mean over its markers.
    pub column_means: Vec<(UserSelector, f64)>,
    /// Unweighted mean of `column_means`.
    pub mean_of_columns: f64,
    pub cells: usize,
}

/// Aggregates the binary reports of one preset; `None` when there are none.
pub fn binary_accuracy_means(reports: &[ExperimentReport], preset: Preset) -> Option<AccuracyMeans> {
    let cells: Vec<&ExperimentReport> = reports
        .iter()
        .filter(|r| r.kind == ExperimentKind::Binary && r.preset == preset)
        .collect();
    if cells.is_empty() {
        return None;
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let all: Vec<f64> = cells.iter().map(|r| r.test_accuracy_pct()).collect();
    let mut users: Vec<UserSelector> = cells.iter().map(|r| r.user).collect();
    users.sort();
    users.dedup();
    let column_means: Vec<(UserSelector, f64)> = users
        .into_iter()
        .map(|u| {
            let col: Vec<f64> = cells.iter().filter(|r| r.user == u).map(|r| r.test_accuracy_pct()).collect();
            (u, mean(&col))
        })
        .collect();
    let cols: Vec<f64> = column_means.iter().map(|c| c.1).collect();
    Some(AccuracyMeans {
        preset,
        grand_mean: mean(&all),
        mean_of_columns: mean(&cols),
        column_means,
        cells: all.len(),
    })
}

/// Runs `task` over `items` on up to `jobs` threads. Results keep the order
/// of `items`; the first error (by item order) wins.
pub fn run_pool<I, T, F>(jobs: usize, items: &[I], task: F) -> Result<Vec<T>>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> Result<T> + Sync,
{
    let workers = jobs.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(task).collect();
    }
    let slots: Vec<Mutex<Option<Result<T>>>> = items.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let result = task(&items[i]);
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    slots.into_iter().map(|s| s.into_inner().unwrap().expect("every slot filled")).collect()
}

/// One discovered file pair with its published (positive, negative) counts.
pub type CountCheck = (User, MarkerClass, crate::dataset::DatasetSummary, (usize, usize));

/// Checks marker file counts against the published per-marker counts.
pub fn check_sample_counts(
    root: &Path,
    tables: &ReferenceTables,
) -> Result<Vec<CountCheck>> {
    let mut out = Vec::new();
    for files in crate::dataset::discover(root)? {
        let summary = crate::dataset::dataset_summary(&files.load()?);
        out.push((files.user, files.marker, summary, tables.sample_counts(files.marker)?));
    }
    Ok(out)
}
