//! `gfe`: validate landmark datasets, train and benchmark region-masked
//! networks, and check gradients.
//!
//! Exit codes: 0 ok, 2 data, 3 pipeline, 4 config, 5 acceptance,
//! 6 gradient check.

mod args;
mod commands;
mod exit;
mod overlay;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use exit::Code;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(Code::Config as u8);
        }
    };
    let result = match &cli.command {
        Command::Validate(a) => commands::validate::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Bench(a) => commands::bench::run(a),
        Command::Gradcheck(a) => commands::gradcheck::run(a),
        Command::Synth(a) => commands::synth::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
