//! Command-line front end: reads a scenario file, runs one analysis and
//! writes a CSV or JSON report.
//!
//! Exit codes: `0` on success, `1` when the model is infeasible or unstable
//! or a report cannot be written, `2` when the command line or the scenario
//! is malformed.

pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use mdf_erlang::RateMode;

use crate::commands::Outcome;
use crate::error::CliError;
use crate::report::emit_report;
use crate::scenario::{Format, Overrides, Scenario};

#[derive(Debug, Parser)]
#[command(
    name = "mdf",
    version,
    about = "Blocking probabilities and capacity planning for MDF communities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Report destination; stdout when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Inclusive capacity grid `a:b:step`.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Rate used for the slotted-chain law: consistent or literal.
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<RateMode>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Loss-model occupancy and blocking at the policy capacity.
    SolveEmlm,
    /// Blocking of the slotted chain's stationary demand.
    MdfBlocking,
    /// Blocking with requirement laws that depend on elapsed time.
    TimevarBlocking,
    /// Blocking of the carry-over chain.
    DelayBlocking,
    /// Monte Carlo estimate at the policy capacity.
    Simulate,
    /// Smallest capacity meeting the blocking target.
    Plan,
    /// Blocking over a capacity grid.
    Sweep,
    /// Distance between slotted and loss-model blocking as the slot shrinks.
    Convergence,
}

fn parse_mode(s: &str) -> Result<RateMode, String> {
    s.parse().map_err(|e: mdf_erlang::Error| e.to_string())
}

/// Runs the program on `argv` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Malformed("--scenario <path> is required".into()))?;
    let overrides = Overrides {
        seed: cli.seed,
        grid: cli.grid.clone(),
        mode: cli.mode,
        alpha: cli.alpha,
        epsilon: cli.epsilon,
    };
    let scenario = Scenario::load(path, &overrides)?;
    let outcome: Outcome = match cli.command {
        Command::SolveEmlm => commands::solve_emlm(&scenario),
        Command::MdfBlocking => commands::mdf_blocking(&scenario),
        Command::TimevarBlocking => commands::timevar_blocking(&scenario),
        Command::DelayBlocking => commands::delay_blocking(&scenario),
        Command::Simulate => commands::simulate_cmd(&scenario),
        Command::Plan => commands::plan(&scenario),
        Command::Sweep => commands::sweep(&scenario),
        Command::Convergence => commands::convergence(&scenario),
    }?;

    let output = cli
        .output
        .clone()
        .or_else(|| scenario.run.output.as_ref().map(PathBuf::from));
    let format = cli.format.or(scenario.run.format).unwrap_or(Format::Csv);
    if let Some(report) = &outcome.report {
        // A plan prints its answer; the full report is written on request.
        if outcome.summary.is_none() || output.is_some() {
            emit_report(report, format, output.as_deref())?;
        }
    }
    if let Some(line) = &outcome.summary {
        println!("{line}");
    }
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
