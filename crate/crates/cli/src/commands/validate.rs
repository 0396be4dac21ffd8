use gfe_core::dataset::{dataset_summary, discover, User};
use gfe_core::reference::ReferenceTables;
use gfe_core::RunConfig;

use crate::args::ValidateArgs;
use crate::exit::{CliResult, Code, Failure};
use crate::overlay::{self, Overrides};

pub fn run(args: &ValidateArgs) -> CliResult<()> {
    let mut o = Overrides::default();
    if let Some(root) = &args.data_root {
        o.put("data_root", root);
    }
    let config = overlay::build(RunConfig::default(), args.config.as_deref(), o)?;
    let root = config.data_root.ok_or_else(|| Failure::config("--data-root is required"))?;
    let files = discover(&root)?;
    if files.is_empty() {
        return Err(Failure::new(Code::Data, format!("{}: no datasets found", root.display())));
    }
    let tables = ReferenceTables::builtin();

    println!("{:<5} {:<15} {:>8} {:>8} {:>7}  expected", "user", "marker", "positive", "negative", "total");
    let mut errors = Vec::new();
    let mut mismatches = 0;
    for f in &files {
        let ds = match f.load() {
            Ok(ds) => ds,
            Err(e) => {
                errors.push(e.to_string());
                continue;
            }
        };
        let s = dataset_summary(&ds);
        // published counts describe the first user's recordings
        let expected = if args.no_reference || f.user != User::A {
            "-".to_string()
        } else {
            let (p, n) = tables.sample_counts(f.marker)?;
            if (p, n) == (s.positive, s.negative) {
                format!("{p}/{n} ok")
            } else {
                mismatches += 1;
                format!("{p}/{n} MISMATCH")
            }
        };
        println!(
            "{:<5} {:<15} {:>8} {:>8} {:>7}  {expected}",
            f.user.name(),
            f.marker.name(),
            s.positive,
            s.negative,
            s.total
        );
    }
    for e in &errors {
        eprintln!("error: {e}");
    }
    println!("{} datasets found, {} parsed", files.len(), files.len() - errors.len());
    if !errors.is_empty() {
        return Err(Failure::new(Code::Data, format!("{} dataset(s) failed to parse", errors.len())));
    }
    if mismatches > 0 {
        let msg = format!("{mismatches} marker file(s) differ from the published counts");
        if args.strict {
            return Err(Failure::new(Code::Data, msg));
        }
        eprintln!("warning: {msg}");
    }
    Ok(())
}
