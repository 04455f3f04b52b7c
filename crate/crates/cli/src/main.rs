//! `stepwalk`: experiments on step-reinforced random walks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Flags};

#[derive(Parser)]
#[command(
    name = "stepwalk",
    version,
    about = "Step-reinforced random walks: exact laws, ASCLT and LIL experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalizing coefficients a_n, s_n^2 and the regime constants
    Coeffs(Flags),
    /// Walk paths: S_n and the center of mass G_n
    Simulate(Flags),
    /// Exact law of S_n by enumeration, checked against the moment recursions
    Oracle(Flags),
    /// Almost-sure CLT log averages T_n(f) along paths
    Asclt(Flags),
    /// LIL-normalized running maxima of walks or centers of mass
    Lil(Flags),
    /// LIL-normalized running maxima of Brownian motion
    Bm(Flags),
    /// Acceptance suites; exits non-zero if any criterion fails
    Verify(Flags),
}

type Runner = fn(&ExperimentConfig) -> anyhow::Result<output::Outcome>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, flags, run): (&str, &Flags, Runner) = match &cli.command {
        Command::Coeffs(f) => ("coeffs", f, commands::coeffs),
        Command::Simulate(f) => ("simulate", f, commands::simulate),
        Command::Oracle(f) => ("oracle", f, commands::oracle),
        Command::Asclt(f) => ("asclt", f, commands::asclt),
        Command::Lil(f) => ("lil", f, commands::lil),
        Command::Bm(f) => ("bm", f, commands::bm),
        Command::Verify(f) => ("verify", f, commands::verify),
    };
    let result = ExperimentConfig::resolve(flags).and_then(|config| {
        let start = Instant::now();
        let outcome = run(&config)?;
        let wall = flags.timing.then(|| start.elapsed().as_secs_f64());
        let pass = outcome.pass;
        output::emit(name, &config, outcome, wall)?;
        Ok(pass)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
