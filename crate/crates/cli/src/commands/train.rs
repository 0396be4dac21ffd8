use std::fs;
use std::path::Path;

use gfe_core::experiments::{compare_with_reference, replay_experiment, ExperimentOutcome};
use gfe_core::reference::ReferenceTables;
use gfe_core::train::history_csv;
use gfe_core::{Metrics, RunConfig};

use crate::args::TrainArgs;
use crate::exit::{write_failure, CliResult, Failure};
use crate::overlay::{self, Overrides};

pub fn config_from(args: &TrainArgs, base: RunConfig, multiclass_list: bool) -> CliResult<RunConfig> {
    let mut o = Overrides::default();
    o.common(&args.common)?;
    o.data(&args.data);
    o.synthetic(&args.synthetic);
    o.model(&args.model)?;
    if let (Some(k), false) = (&args.model.multiclass, multiclass_list) {
        let k: usize = k.trim().parse().map_err(|_| Failure::config(format!("--multiclass: invalid size {k:?}")))?;
        o.put("multiclass.k", k);
    }
    overlay::build(base, args.common.config.as_deref(), o)
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| write_failure(path, e))
}

pub fn ensure_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| write_failure(path, e))
}

pub fn print_metrics(title: &str, m: &Metrics) {
    println!("{title}: n={} accuracy={:.2}%", m.n, 100.0 * m.accuracy);
    println!("  {:<6} {:>9} {:>9} {:>9}", "class", "precision", "recall", "f_score");
    for (c, cm) in m.per_class.iter().enumerate() {
        println!("  {c:<6} {:>9.4} {:>9.4} {:>9.4}", cm.precision, cm.recall, cm.f_score);
    }
    println!("  {:<6} {:>9.4} {:>9.4} {:>9.4}", "macro", m.macro_precision, m.macro_recall, m.macro_f_score);
}

pub fn run(args: &TrainArgs) -> CliResult<()> {
    let config = config_from(args, RunConfig::default(), false)?;
    config.validate()?;
    if config.multiclass.is_none() && (config.markers()?.len() != 1 || config.users()?.len() != 1) {
        return Err(Failure::config("train runs one experiment: name exactly one marker and one user"));
    }
    if let Some(k) = config.multiclass {
        let named = config.marker.split(',').count();
        if named != k {
            return Err(Failure::config(format!("--multiclass {k} needs {k} comma-separated markers, got {named}")));
        }
    }
    let ExperimentOutcome { report, model } = replay_experiment(&config)?;

    ensure_dir(&config.out)?;
    write_file(&config.out.join("model.json"), &model.to_json())?;
    let report_json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&config.out.join("report.json"), &report_json)?;
    write_file(&config.out.join("history.csv"), &history_csv(&report.history))?;

    println!("{} ({} params, {} steps, {:.1}s)", report.id, report.param_count, report.steps, report.duration_secs);
    print_metrics("train", &report.train_metrics);
    print_metrics("test", &report.test_metrics);
    let deviations = if config.synthetic { Vec::new() } else { compare_with_reference(&report, &ReferenceTables::builtin())? };
    for d in deviations {
        let flag = if d.within_band { "" } else { "  outside band" };
        println!("reference {}: {:.4} vs {:.4} ({:+.4}){flag}", d.key, d.reproduced, d.reference, d.deviation);
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote model.json, report.json, history.csv to {}", config.out.display());
    Ok(())
}
