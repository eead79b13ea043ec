//! `reabc`: run, tune and summarize rare-event SMC ABC experiments.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for failures
//! during a run.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Runtime(m) => write!(f, "run failed: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "reabc", version, about = "Likelihood-free inference with rare-event SMC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sampler described by the `[method]` section.
    Run(CommonArgs),
    /// Tune a threshold schedule, proposal and particle count.
    Pilot(CommonArgs),
    /// Summarize a trace file.
    Diagnose(DiagnoseArgs),
    /// Measure sampler cost across thresholds.
    CostScan(CommonArgs),
}

#[derive(Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; overrides the configured count.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory; overrides the configured one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// True parameter values, comma separated, to report RMSE.
    #[arg(long, value_delimiter = ',')]
    pub truth: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also write the report to `diagnostics.txt` in this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => commands::run(&args),
        Command::Pilot(args) => commands::pilot(&args),
        Command::Diagnose(args) => commands::diagnose(&args),
        Command::CostScan(args) => commands::cost_scan(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("reabc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
