//! End-to-end acceptance checks, one status line per criterion.
//!
//! Criteria 6-8 need the public landmark dataset. Point `GFE_DATA_ROOT` at
//! it to run them; otherwise they are reported as SKIP.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use gfe_core::config::{ComboPolicy, RunConfig, UserSelector};
use gfe_core::dataset::{LandmarkFrame, MarkerClass, NUM_COORDS};
use gfe_core::experiments::{replay_experiment, run_binary_experiment, run_multiclass_experiment, run_pool};
use gfe_core::gradcheck::{gradcheck_sweep, TOLERANCE};
use gfe_core::preprocess::{
    apply_standardizer, balance_classes, fit_standardizer, impute_missing, split_train_test, LabeledSet,
    PreparedSet,
};
use gfe_core::reference::ReferenceTables;
use gfe_core::seed::derive_seed;
use gfe_core::structnet::{build_spec, densify, forward, param_count, xavier_init, Preset, XavierFans};
use gfe_core::train::{train, BatchSize, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Status {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn data_root() -> Option<PathBuf> {
    std::env::var_os("GFE_DATA_ROOT").map(PathBuf::from).filter(|p| p.is_dir())
}

fn dataset_config(root: PathBuf) -> RunConfig {
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    RunConfig { data_root: Some(root), jobs, ..Default::default() }
}

fn gradient_correctness() -> Check {
    let start = Instant::now();
    let checks = gradcheck_sweep(42, 0.05, false).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let worst = checks.iter().max_by(|a, b| a.max_relative_error.total_cmp(&b.max_relative_error)).unwrap();
    for preset_k in ["structured/2 ", "structured/9 ", "fc/2 "] {
        for kind in ["cross_entropy", "mse"] {
            let label = format!("{preset_k}{kind}");
            ensure(checks.iter().any(|c| c.label == label), format!("{label} not covered"))?;
        }
    }
    for c in &checks {
        ensure(
            c.max_relative_error < TOLERANCE,
            format!("{}: relative error {:.3e} at param {}", c.label, c.max_relative_error, c.worst_param),
        )?;
    }
    ensure(elapsed < Duration::from_secs(30), format!("took {elapsed:.1?}"))?;
    let corrupted = gradcheck_sweep(42, 0.05, true).map_err(|e| e.to_string())?;
    ensure(corrupted.iter().any(|c| !c.passed()), "a corrupted gradient went unnoticed")?;
    Ok(format!(
        "{} checks, worst {:.2e} ({}), {:.1?}",
        checks.len(),
        worst.max_relative_error,
        worst.label,
        elapsed
    ))
}

/// Allowed (neuron, input) pairs, written out from the layer definitions.
fn structured_mask(layer: usize, k: usize) -> Vec<Vec<bool>> {
    const REGION_BOUNDS: [(usize, usize); 10] =
        [(0, 7), (8, 15), (16, 25), (26, 35), (36, 47), (48, 67), (68, 86), (87, 89), (90, 94), (95, 99)];
    match layer {
        0 => (0..100).map(|n| (0..300).map(|i| i / 3 == n).collect()).collect(),
        1 => REGION_BOUNDS.iter().map(|&(a, b)| (0..100).map(|p| a <= p && p <= b).collect()).collect(),
        _ => vec![vec![true; 10]; k],
    }
}

fn mask_invariance() -> Check {
    let counts = [
        (Preset::Structured, 2, 532),
        (Preset::Structured, 9, 609),
        (Preset::FullyConnected, 2, 31132),
    ];
    for (preset, k, expected) in counts {
        let got = param_count(&build_spec(preset, k).unwrap());
        ensure(got == expected, format!("{} K={k}: {got} params, expected {expected}", preset.name()))?;
    }

    let mut detail = Vec::new();
    for k in [2, 9] {
        let spec = build_spec(Preset::Structured, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let set = PreparedSet {
            features: (0..32).map(|_| (0..NUM_COORDS).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect(),
            labels: (0..32).map(|i| i % k).collect(),
            ids: (0..32).collect(),
        };
        let config = TrainConfig { epochs: 1000, batch_size: BatchSize::Size(32), seed: 5, ..Default::default() };
        let outcome = train(&spec, &set, &config).map_err(|e| e.to_string())?;
        ensure(outcome.steps == 1000, format!("{} steps", outcome.steps))?;
        let init = xavier_init(&spec, derive_seed(5, "init"), XavierFans::Masked);
        ensure(outcome.params != init, "parameters did not move")?;
        for (idx, dense) in densify(&spec, &outcome.params).iter().enumerate() {
            let mask = structured_mask(idx, k);
            ensure(dense.rows == mask.len() && dense.cols == mask[0].len(), format!("layer {idx} shape"))?;
            let mut zeros = 0;
            for (r, row) in mask.iter().enumerate() {
                for (c, &allowed) in row.iter().enumerate() {
                    if !allowed {
                        ensure(dense.get(r, c) == 0.0, format!("K={k} layer {idx} ({r},{c}) is nonzero"))?;
                        zeros += 1;
                    }
                }
            }
            detail.push(zeros);
        }
    }
    Ok(format!("532/609/31132 params; masked zeros per layer {detail:?} after 1000 steps"))
}

fn dense_forward(layers: &[gfe_core::structnet::DenseLayer], x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    for (idx, layer) in layers.iter().enumerate() {
        let z: Vec<f64> = (0..layer.rows)
            .map(|r| (0..layer.cols).map(|c| layer.get(r, c) * a[c]).sum::<f64>() + layer.biases[r])
            .collect();
        a = if idx + 1 < layers.len() {
            z.iter().map(|v| v.tanh()).collect()
        } else {
            let m = z.iter().cloned().fold(f64::MIN, f64::max);
            let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
            let s: f64 = e.iter().sum();
            e.iter().map(|v| v / s).collect()
        };
    }
    a
}

fn forward_oracle() -> Check {
    let mut worst: f64 = 0.0;
    for k in [2, 9] {
        let spec = build_spec(Preset::Structured, k).unwrap();
        let mut params = xavier_init(&spec, 11, XavierFans::Masked);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for layer in &mut params.layers {
            layer.biases.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
        }
        let dense = densify(&spec, &params);
        for _ in 0..100 {
            let x: Vec<f64> = (0..NUM_COORDS).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let got = forward(&spec, &params, &x).map_err(|e| e.to_string())?;
            let want = dense_forward(&dense, &x);
            for (g, w) in got.probabilities().iter().zip(&want) {
                worst = worst.max((g - w).abs());
            }
        }
    }
    ensure(worst < 1e-12, format!("max abs diff {worst:.3e}"))?;
    Ok(format!("200 inputs, max abs diff {worst:.2e}"))
}

fn frame(col0: f64, rest: f64) -> LandmarkFrame {
    let mut coords = vec![rest; NUM_COORDS];
    coords[0] = col0;
    LandmarkFrame::new(0.0, coords).unwrap()
}

fn toy_set(pos: usize, neg: usize) -> LabeledSet {
    let frames = (0..pos + neg).map(|i| frame(i as f64 + 1.0, 1.0)).collect();
    let labels = (0..pos + neg).map(|i| usize::from(i < pos)).collect();
    LabeledSet::new(frames, labels).unwrap()
}

fn preprocessing_oracles() -> Check {
    // imputation
    let (out, report) = impute_missing(&[frame(1.0, 4.0), frame(0.0, 4.0), frame(3.0, 4.0)]);
    let col: Vec<f64> = out.iter().map(|f| f.coords()[0]).collect();
    ensure(col == [1.0, 2.0, 3.0], format!("imputed column {col:?}"))?;
    ensure(report.replaced[0] == 1 && report.total_replaced() == 1, "replacement count")?;
    let (same, _) = impute_missing(&[frame(1.0, 4.0), frame(2.0, 4.0)]);
    ensure(same == [frame(1.0, 4.0), frame(2.0, 4.0)], "column without placeholders changed")?;
    let (degenerate, report) = impute_missing(&[frame(0.0, 4.0), frame(0.0, 4.0)]);
    ensure(degenerate.iter().all(|f| f.coords()[0] == 0.0), "all-placeholder column changed")?;
    ensure(report.all_placeholder == [0], "all-placeholder column not flagged")?;

    // z-score
    let rows = [vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]];
    let stats = fit_standardizer(&rows).map_err(|e| e.to_string())?;
    ensure(stats.means == [2.0, 5.0], "means")?;
    ensure((stats.stds[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-12, "population std")?;
    ensure(stats.stds[1] == 0.0 && stats.divisor(1) == 1.0, "constant column guard")?;
    let z = apply_standardizer(&stats, &rows);
    let expect = 1.5f64.sqrt();
    ensure((z[0][0] + expect).abs() < 1e-12 && z[1][0] == 0.0 && (z[2][0] - expect).abs() < 1e-12, "z values")?;
    ensure(z.iter().all(|r| r[1] == 0.0), "guarded column not zero")?;
    ensure(fit_standardizer(&rows[..1]).is_err(), "single frame accepted")?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let wide: Vec<Vec<f64>> =
        (0..57).map(|_| (0..NUM_COORDS).map(|j| rng.gen_range(-10.0..10.0) * (j + 1) as f64 + 400.0).collect()).collect();
    let stats = fit_standardizer(&wide).map_err(|e| e.to_string())?;
    let z = apply_standardizer(&stats, &wide);
    let (mut worst_mean, mut worst_std) = (0.0f64, 0.0f64);
    for j in 0..NUM_COORDS {
        let n = z.len() as f64;
        let m = z.iter().map(|r| r[j]).sum::<f64>() / n;
        let sd = (z.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n).sqrt();
        worst_mean = worst_mean.max(m.abs());
        worst_std = worst_std.max((sd - 1.0).abs());
    }
    ensure(worst_mean < 1e-9 && worst_std < 1e-9, format!("post-fit mean {worst_mean:.2e}, std {worst_std:.2e}"))?;

    // balancing
    let b = balance_classes(&toy_set(10, 30), 2, 1).map_err(|e| e.to_string())?;
    ensure(b.class_counts(2) == [10, 10], format!("balanced counts {:?}", b.class_counts(2)))?;
    ensure(b == balance_classes(&toy_set(10, 30), 2, 1).unwrap(), "balancing not deterministic")?;
    let even = toy_set(5, 5);
    let mut kept = balance_classes(&even, 2, 9).unwrap().ids;
    kept.sort_unstable();
    ensure(kept == (0..10).collect::<Vec<_>>(), "balanced input lost samples")?;

    // stratified split
    let (train, test) = split_train_test(&toy_set(100, 100), 2, 0.30, 4).map_err(|e| e.to_string())?;
    ensure(test.class_counts(2) == [30, 30] && train.class_counts(2) == [70, 70], "100+100 split counts")?;
    let again = split_train_test(&toy_set(100, 100), 2, 0.30, 4).unwrap();
    ensure(again == (train.clone(), test.clone()), "split not deterministic")?;
    let mut ids: Vec<usize> = train.ids.iter().chain(&test.ids).copied().collect();
    ids.sort_unstable();
    ensure(ids == (0..200).collect::<Vec<_>>(), "split is not a partition")?;
    let (_, test) = split_train_test(&toy_set(541, 541), 2, 0.30, 4).unwrap();
    ensure(test.len() == 324, format!("541+541 test size {}", test.len()))?;

    Ok(format!("impute, z-score (mean {worst_mean:.1e}, std {worst_std:.1e}), balance 10/10, split 30+30 and 324"))
}

fn synthetic_end_to_end() -> Check {
    let config = RunConfig {
        synthetic: true,
        synthetic_regions: "mouth".into(),
        synthetic_positives: 200,
        synthetic_negatives: 200,
        epochs: 200,
        ..Default::default()
    };
    let start = Instant::now();
    let out = run_binary_experiment(MarkerClass::Assertion, UserSelector::A, Preset::Structured, &config)
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let (train, test) = (out.report.train_metrics.accuracy, out.report.test_metrics.accuracy);
    let summary = format!("train {:.2}%, test {:.2}%, {elapsed:.1?}", 100.0 * train, 100.0 * test);
    ensure(train >= 0.99 && test >= 0.90, summary.clone())?;
    ensure(elapsed < Duration::from_secs(60), summary.clone())?;
    Ok(summary)
}

fn published_reproduction(root: PathBuf, tables: &ReferenceTables) -> Check {
    let config = dataset_config(root);
    let outcomes = run_pool(config.jobs, &MarkerClass::ALL, |&m| {
        run_binary_experiment(m, UserSelector::A, Preset::Structured, &config)
    })
    .map_err(|e| e.to_string())?;
    let accs: Vec<f64> = outcomes.iter().map(|o| o.report.test_accuracy_pct()).collect();
    for (o, acc) in outcomes.iter().zip(&accs) {
        let marker = o.report.markers[0].name();
        ensure(*acc >= 90.0, format!("{marker}: {acc:.2}% < 90%"))?;
        ensure(o.report.duration_secs < 120.0, format!("{marker}: {:.0}s", o.report.duration_secs))?;
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let reference = tables.get("binary_accuracy_mean.structured.a").map_err(|e| e.to_string())?;
    ensure((mean - reference).abs() <= 5.0, format!("mean {mean:.2}% vs {reference:.2}%"))?;
    Ok(format!("min {:.2}%, mean {mean:.2}% (reference {reference:.2}%)", accs.iter().cloned().fold(100.0, f64::min)))
}

fn structured_beats_fc(root: PathBuf) -> Check {
    let config = dataset_config(root);
    let pairs: Vec<(MarkerClass, Preset)> = MarkerClass::ALL
        .iter()
        .flat_map(|&m| [(m, Preset::Structured), (m, Preset::FullyConnected)])
        .collect();
    let accs = run_pool(config.jobs, &pairs, |&(m, p)| {
        run_binary_experiment(m, UserSelector::A, p, &config).map(|o| o.report.test_accuracy_pct())
    })
    .map_err(|e| e.to_string())?;
    let wins = accs.chunks(2).filter(|pair| pair[0] > pair[1]).count();
    let summary = format!("structured ahead on {wins}/9 markers");
    ensure(wins >= 7, summary.clone())?;
    Ok(summary)
}

fn multiclass(root: PathBuf) -> Check {
    let config = dataset_config(root);
    let three = run_multiclass_experiment(3, UserSelector::A, ComboPolicy::Sample(10), &config)
        .map_err(|e| e.to_string())?;
    let nine =
        run_multiclass_experiment(9, UserSelector::A, ComboPolicy::All, &config).map_err(|e| e.to_string())?;
    let summary = format!(
        "k=3 mean {:.2}% over {} subsets, k=9 {:.2}%",
        three.mean_test_accuracy_pct,
        three.combinations.len(),
        nine.mean_test_accuracy_pct
    );
    ensure(three.combinations.len() == 10 && nine.combinations.len() == 1, summary.clone())?;
    ensure(three.mean_test_accuracy_pct >= 90.0 && nine.mean_test_accuracy_pct >= 88.0, summary.clone())?;
    Ok(summary)
}

fn determinism() -> Check {
    let base = RunConfig {
        synthetic: true,
        synthetic_positives: 60,
        synthetic_negatives: 90,
        epochs: 8,
        seed: 2024,
        ..Default::default()
    };
    let runs = [
        run_binary_experiment(MarkerClass::Negative, UserSelector::B, Preset::Structured, &base),
        run_binary_experiment(MarkerClass::Focus, UserSelector::Ab, Preset::FullyConnected, &base),
        gfe_core::experiments::run_multiclass_combination(
            &[MarkerClass::Topic, MarkerClass::Assertion, MarkerClass::Relative],
            UserSelector::A,
            &base,
        ),
    ];
    let mut replayed = 0;
    for run in runs {
        let first = run.map_err(|e| e.to_string())?;
        let report_json = serde_json::to_string(&first.report).map_err(|e| e.to_string())?;
        let snapshot = RunConfig::from_json(&report_json).map_err(|e| e.to_string())?;
        let second = replay_experiment(&snapshot).map_err(|e| e.to_string())?;
        ensure(
            first.model.to_json().as_bytes() == second.model.to_json().as_bytes(),
            format!("{}: replayed model differs", first.report.id),
        )?;
        ensure(second.report.id == first.report.id, "replayed a different experiment")?;
        replayed += 1;
    }
    Ok(format!("{replayed} experiments replayed to identical model files"))
}

fn main() {
    let tables = ReferenceTables::builtin();
    let root = data_root();
    let with_data = |f: &dyn Fn(PathBuf) -> Check| match &root {
        Some(r) => f(r.clone()).into(),
        None => Status::Skip("GFE_DATA_ROOT not set".into()),
    };
    let results: Vec<(u32, &str, Status)> = vec![
        (1, "gradient correctness", gradient_correctness().into()),
        (2, "mask invariance", mask_invariance().into()),
        (3, "forward oracle", forward_oracle().into()),
        (4, "preprocessing oracles", preprocessing_oracles().into()),
        (5, "synthetic end-to-end", synthetic_end_to_end().into()),
        (6, "published accuracy reproduction", with_data(&|r| published_reproduction(r, &tables))),
        (7, "structured vs fc ordering", with_data(&structured_beats_fc)),
        (8, "multiclass", with_data(&multiclass)),
        (9, "determinism", determinism().into()),
    ];
    let mut failed = 0;
    for (n, name, status) in &results {
        let (tag, detail) = match status {
            Status::Pass(d) => ("PASS", d),
            Status::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Status::Skip(d) => ("SKIP", d),
        };
        println!("criterion {n} {name}: {tag} ({detail})");
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

impl From<Check> for Status {
    fn from(c: Check) -> Self {
        match c {
            Ok(d) => Status::Pass(d),
            Err(d) => Status::Fail(d),
        }
    }
}
