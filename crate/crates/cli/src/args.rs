use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "gfe", version, about = "Train and benchmark region-masked classifiers for grammatical facial expressions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse every dataset file under a data root and print per-marker counts.
    Validate(ValidateArgs),
    /// Train one experiment and write model, report and history files.
    Train(TrainArgs),
    /// Run the binary or multiclass protocol across markers and users and
    /// compare with the published tables.
    Bench(BenchArgs),
    /// Check analytic gradients against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Write a synthetic dataset in the landmark file layout.
    Synth(SynthArgs),
}

/// Settings shared by every command that builds a run configuration.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config with flat dotted keys; a report.json is accepted too.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override any config key, e.g. `--set loss.reg_beta=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Marker name, comma list, or `all`.
    #[arg(long, visible_alias = "markers")]
    pub marker: Option<String>,
    /// `a`, `b`, `ab`, comma list, or `all`.
    #[arg(long, visible_alias = "users")]
    pub user: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data_root: Option<PathBuf>,
    /// Use generated data instead of files.
    #[arg(long)]
    pub synthetic: bool,
    /// Worker threads for independent experiments.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SyntheticArgs {
    /// Positive frames per marker file.
    #[arg(long)]
    pub positives: Option<usize>,
    /// Negative frames per marker file.
    #[arg(long)]
    pub negatives: Option<usize>,
    /// Regions carrying the signal (names or indices, comma separated).
    #[arg(long)]
    pub regions: Option<String>,
    /// Signal shift in noise standard deviations.
    #[arg(long)]
    pub shift: Option<f64>,
    #[arg(long)]
    pub placeholder_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// `structured` or `fc`.
    #[arg(long)]
    pub preset: Option<String>,
    /// `cross_entropy` or `mse`.
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long)]
    pub reg_beta: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batch size or `all`.
    #[arg(long)]
    pub batch: Option<String>,
    /// `before-split`, `after-split` or `off`.
    #[arg(long)]
    pub balance: Option<String>,
    /// `train` or `all`.
    #[arg(long)]
    pub fit_stats_on: Option<String>,
    /// `masked` or `dense`.
    #[arg(long)]
    pub xavier_fans: Option<String>,
    /// Multiclass subset size(s); bench accepts a comma list.
    #[arg(long)]
    pub multiclass: Option<String>,
    /// `default`, `all` or `sample:N`.
    #[arg(long)]
    pub combos: Option<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data_root: Option<PathBuf>,
    /// Treat count mismatches against the published counts as errors.
    #[arg(long)]
    pub strict: bool,
    /// Skip the comparison with the published counts.
    #[arg(long)]
    pub no_reference: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub run: TrainArgs,
    /// Fail with exit code 5 unless the acceptance thresholds hold.
    #[arg(long)]
    pub accept: bool,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Coefficient for the separate L2 penalty check.
    #[arg(long, default_value_t = 0.05)]
    pub reg_beta: f64,
    #[arg(long, hide = true)]
    pub corrupt_gradient: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
}
