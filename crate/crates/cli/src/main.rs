//! `wfock`: config-driven batch runs of the weighted Fock-space workbench.

mod commands;
mod config;
mod error;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "wfock",
    version,
    about = "Toeplitz operators on weighted Fock spaces, from a TOML config"
)]
struct Cli {
    /// Output directory (overrides `output` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print nothing but errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Boundedness, compactness and Schatten checks; writes report.json and tables/.
    Analyze { config: PathBuf },
    /// Singular values of one measure at the largest N; writes spectrum_<label>.csv.
    Spectrum { config: PathBuf, label: String },
    /// Kernel diagnostics for the (a, z) pairs of a CSV file with columns
    /// a_re, a_im, z_re, z_im; writes kernels.csv.
    Kernels { config: PathBuf, points: PathBuf },
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let path = match &cli.command {
        Command::Analyze { config } | Command::Spectrum { config, .. } | Command::Kernels { config, .. } => config,
    };
    let config = RunConfig::load(path)?;
    let ctx = Context::new(&config, cli.out.clone(), cli.quiet);
    match &cli.command {
        Command::Analyze { .. } => commands::analyze(&config, &ctx),
        Command::Spectrum { label, .. } => commands::spectrum(&config, label, &ctx),
        Command::Kernels { points, .. } => commands::kernels(&config, points, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("wfock: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
