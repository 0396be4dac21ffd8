use gfe_core::config::UserSelector;
use gfe_core::dataset::{dataset_files, dataset_summary, serialize_datapoints, serialize_targets};
use gfe_core::experiments::synthetic_marker_dataset;
use gfe_core::RunConfig;

use crate::args::SynthArgs;
use crate::commands::train::{ensure_dir, write_file};
use crate::exit::{CliResult, Failure};
use crate::overlay::{self, Overrides};

pub fn run(args: &SynthArgs) -> CliResult<()> {
    let mut o = Overrides::default();
    o.common(&args.common)?;
    o.synthetic(&args.synthetic);
    let base = RunConfig { marker: "all".into(), user: "a,b".into(), synthetic: true, ..RunConfig::default() };
    let config = overlay::build(base, args.common.config.as_deref(), o)?;
    config.validate()?;
    if config.synthetic_positives == 0 || config.synthetic_negatives == 0 {
        return Err(Failure::config("synthetic counts must be positive"));
    }
    let mut users: Vec<_> = config.users()?.into_iter().flat_map(UserSelector::users).collect();
    users.sort();
    users.dedup();
    let markers = config.markers()?;
    for m in &markers {
        config.signal_regions(*m)?;
    }

    ensure_dir(&config.out)?;
    for &user in &users {
        for &marker in &markers {
            let ds = synthetic_marker_dataset(&config, marker, user)?;
            let files = dataset_files(&config.out, user, marker)?;
            write_file(&files.datapoints, &serialize_datapoints(ds.frames()))?;
            write_file(&files.targets, &serialize_targets(ds.labels()))?;
            let s = dataset_summary(&ds);
            println!("{} {}: {} positive, {} negative", user.name(), marker.name(), s.positive, s.negative);
        }
    }
    println!("wrote {} marker files to {}", users.len() * markers.len(), config.out.display());
    Ok(())
}
