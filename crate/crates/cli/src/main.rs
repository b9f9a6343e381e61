//! `qbounce` command-line interface.
//!
//! Subcommands: `spectrum`, `simulate`, `sweep`, `fit`, `predict`, `synth`.
//! Every command reads shared physics flags (particle, gravity, basis size)
//! either from the command line or from a `key = value` config file given
//! with `--config`; explicit flags win on conflict. Outputs are flat CSV and
//! JSON suitable for external plotting, with floats printed at 17
//! significant digits so identical runs produce byte-identical files.
//!
//! Exit codes: 0 success, 1 computational failure (propagation diagnostics
//! exceeded), 2 usage or I/O error.

use std::process::ExitCode;

use clap::Parser;
use qbounce_cli::commands;
use qbounce_cli::config::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // A zero request falls back to rayon's default pool size.
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
    let result = match &cli.command {
        Command::Spectrum(args) => commands::spectrum::run(&cli, args),
        Command::Simulate(args) => commands::simulate::run(&cli, args),
        Command::Sweep(args) => commands::sweep::run(&cli, args),
        Command::Fit(args) => commands::fit::run(&cli, args),
        Command::Predict(args) => commands::predict::run(&cli, args),
        Command::Synth(args) => commands::synth::run(&cli, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.message());
            ExitCode::from(e.code())
        }
    }
}
