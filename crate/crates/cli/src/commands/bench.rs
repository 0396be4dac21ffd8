use gfe_core::config::UserSelector;
use gfe_core::experiments::{
    binary_accuracy_means, compare_with_reference, run_binary_experiment, run_multiclass_experiment, run_pool,
    AccuracyMeans, ExperimentReport, MulticlassReport,
};
use gfe_core::reference::{compare_cell, Deviation, ReferenceTables};
use gfe_core::{MarkerClass, Preset, RunConfig};
use serde::Serialize;

use crate::args::BenchArgs;
use crate::commands::train::{config_from, ensure_dir, write_file};
use crate::exit::{CliResult, Code, Failure};

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Debug, Serialize)]
struct BenchReport {
    config: RunConfig,
    reports: Vec<ExperimentReport>,
    multiclass: Vec<MulticlassReport>,
    means: Vec<AccuracyMeans>,
    deviations: Vec<Deviation>,
    acceptance: Vec<Check>,
}

fn multiclass_sizes(text: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(|k| k.trim().parse().map_err(|_| Failure::config(format!("--multiclass: invalid size {k:?}"))))
        .collect()
}

fn run_binary(config: &RunConfig) -> CliResult<Vec<ExperimentReport>> {
    let mut jobs = Vec::new();
    for marker in config.markers()? {
        for user in config.users()? {
            for preset in [Preset::Structured, Preset::FullyConnected] {
                jobs.push((marker, user, preset));
            }
        }
    }
    let mut reports = run_pool(config.jobs, &jobs, |&(m, u, p)| run_binary_experiment(m, u, p, config).map(|o| o.report))?;
    reports.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(reports)
}

fn print_binary(reports: &[ExperimentReport], tables: &ReferenceTables) {
    println!("{:<5} {:<15} {:>10} {:>10} {:>10} {:>10}", "user", "marker", "structured", "fc", "ref", "ref fc");
    for s in reports.iter().filter(|r| r.preset == Preset::Structured) {
        let fc = reports
            .iter()
            .find(|r| r.preset == Preset::FullyConnected && r.user == s.user && r.markers == s.markers);
        let reference = |preset: &str| {
            tables
                .get(&format!("binary_accuracy.{preset}.{}.{}", s.user.name(), s.markers[0].name()))
                .map_or("-".to_string(), |v| format!("{v:.2}"))
        };
        println!(
            "{:<5} {:<15} {:>10.2} {:>10} {:>10} {:>10}",
            s.user.name(),
            s.markers[0].name(),
            s.test_accuracy_pct(),
            fc.map_or("-".to_string(), |r| format!("{:.2}", r.test_accuracy_pct())),
            reference("structured"),
            reference("fc"),
        );
    }
}

fn binary_checks(reports: &[ExperimentReport], synthetic: bool, tables: &ReferenceTables) -> Vec<Check> {
    let mut checks = Vec::new();
    let pair = |m: MarkerClass, u: UserSelector| {
        let find = |p| reports.iter().find(|r| r.preset == p && r.user == u && r.markers[0] == m);
        (find(Preset::Structured), find(Preset::FullyConnected))
    };
    if synthetic {
        for s in reports.iter().filter(|r| r.preset == Preset::Structured) {
            let (_, fc) = pair(s.markers[0], s.user);
            let acc = s.test_accuracy_pct();
            let mut passed = acc >= 90.0;
            let mut detail = format!("structured {acc:.2}%");
            if let Some(fc) = fc {
                passed &= acc >= fc.test_accuracy_pct() - 2.0;
                detail.push_str(&format!(", fc {:.2}%", fc.test_accuracy_pct()));
            }
            checks.push(Check { name: format!("synthetic {}/{}", s.user.name(), s.markers[0].name()), passed, detail });
        }
        return checks;
    }

    let user_a: Vec<_> = MarkerClass::ALL.iter().map(|&m| (m, pair(m, UserSelector::A))).collect();
    let structured: Vec<(MarkerClass, f64, f64)> = user_a
        .iter()
        .filter_map(|(m, (s, _))| s.map(|s| (*m, s.test_accuracy_pct(), s.duration_secs)))
        .collect();
    for &(m, acc, secs) in &structured {
        checks.push(Check {
            name: format!("binary a/{} structured >= 90%", m.name()),
            passed: acc >= 90.0 && secs < 120.0,
            detail: format!("{acc:.2}% in {secs:.0}s"),
        });
    }
    if structured.len() == MarkerClass::ALL.len() {
        let mean = structured.iter().map(|s| s.1).sum::<f64>() / structured.len() as f64;
        let reference = tables.get("binary_accuracy_mean.structured.a").unwrap_or(f64::NAN);
        checks.push(Check {
            name: "binary a mean within 5 points".into(),
            passed: (mean - reference).abs() <= 5.0,
            detail: format!("{mean:.2}% vs {reference:.2}%"),
        });
        let paired: Vec<_> = user_a.iter().filter_map(|(_, (s, f))| Some((s.as_ref()?, f.as_ref()?))).collect();
        if paired.len() == MarkerClass::ALL.len() {
            let wins = paired.iter().filter(|(s, f)| s.test_accuracy_pct() > f.test_accuracy_pct()).count();
            checks.push(Check {
                name: "structured ahead of fc on >= 7 markers".into(),
                passed: wins >= 7,
                detail: format!("{wins}/9"),
            });
        }
    }
    checks
}

fn multiclass_checks(results: &[MulticlassReport]) -> Vec<Check> {
    results
        .iter()
        .filter(|r| r.user == UserSelector::A)
        .filter_map(|r| {
            let floor = match r.k {
                3 => 90.0,
                9 => 88.0,
                _ => return None,
            };
            Some(Check {
                name: format!("multiclass a k={} >= {floor}%", r.k),
                passed: r.mean_test_accuracy_pct >= floor,
                detail: format!("{:.2}% over {} subsets", r.mean_test_accuracy_pct, r.combinations.len()),
            })
        })
        .collect()
}

pub fn run(args: &BenchArgs) -> CliResult<()> {
    let base = RunConfig { marker: "all".into(), ..RunConfig::default() };
    let config = config_from(&args.run, base, true)?;
    config.validate()?;
    let tables = ReferenceTables::builtin();
    let sizes = match (&args.run.model.multiclass, config.multiclass) {
        (Some(list), _) => multiclass_sizes(list)?,
        (None, Some(k)) => vec![k],
        (None, None) => Vec::new(),
    };

    let mut out = BenchReport {
        config: config.clone(),
        reports: Vec::new(),
        multiclass: Vec::new(),
        means: Vec::new(),
        deviations: Vec::new(),
        acceptance: Vec::new(),
    };

    if sizes.is_empty() {
        out.reports = run_binary(&config)?;
        print_binary(&out.reports, &tables);
        if !config.synthetic {
            for r in &out.reports {
                out.deviations.extend(compare_with_reference(r, &tables).unwrap_or_default());
            }
        }
        for preset in [Preset::Structured, Preset::FullyConnected] {
            if let Some(m) = binary_accuracy_means(&out.reports, preset) {
                let cols: Vec<String> = m.column_means.iter().map(|(u, v)| format!("{}={v:.2}", u.name())).collect();
                println!(
                    "{} mean over {} cells {:.2}%; mean of user means {:.2}% ({})",
                    preset.name(),
                    m.cells,
                    m.grand_mean,
                    m.mean_of_columns,
                    cols.join(", ")
                );
                out.means.push(m);
            }
        }
        out.acceptance = binary_checks(&out.reports, config.synthetic, &tables);
    } else {
        let policy = config.combo_policy()?;
        for &k in &sizes {
            for user in config.users()? {
                let r = run_multiclass_experiment(k, user, policy, &config)?;
                let reference = if config.synthetic {
                    None
                } else {
                    compare_cell(&tables, &r.reference_key(), r.mean_test_accuracy_pct).ok()
                };
                println!(
                    "multiclass k={k} user {}: {} subsets, mean {:.2}%{}",
                    user.name(),
                    r.combinations.len(),
                    r.mean_test_accuracy_pct,
                    reference.as_ref().map_or(String::new(), |d| format!(" (reference {:.2}%)", d.reference))
                );
                out.deviations.extend(reference);
                out.multiclass.push(r);
            }
        }
        if !config.synthetic {
            out.acceptance = multiclass_checks(&out.multiclass);
        }
    }

    if config.synthetic {
        println!("reference comparison skipped for synthetic data");
    }
    let outside: Vec<&Deviation> = out.deviations.iter().filter(|d| !d.within_band).collect();
    println!("{} reference cells compared, {} outside band", out.deviations.len(), outside.len());
    for d in outside {
        println!("  {}: {:.4} vs {:.4} ({:+.4})", d.key, d.reproduced, d.reference, d.deviation);
    }

    ensure_dir(&config.out)?;
    let path = config.out.join("bench.json");
    write_file(&path, &serde_json::to_string_pretty(&out).expect("bench report serializes"))?;
    println!("wrote {}", path.display());

    if args.accept {
        if out.acceptance.is_empty() {
            return Err(Failure::new(Code::Acceptance, "no acceptance check applies to this selection"));
        }
        for c in &out.acceptance {
            println!("accept {}: {} ({})", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
        }
        let failed = out.acceptance.iter().filter(|c| !c.passed).count();
        if failed > 0 {
            return Err(Failure::new(Code::Acceptance, format!("{failed} acceptance check(s) failed")));
        }
    }
    Ok(())
}
