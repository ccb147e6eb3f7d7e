//! `arw`: batch experiment runner.
//!
//! Exit codes: 0 pass, 1 property violation, 2 config or usage error,
//! 3 budget exceeded.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use arw_core::SeedSpec;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use crate::commands::Ctx;
use crate::config::{
    AbelianConfig, CriticalConfig, FixationConfig, FlowConfig, RunSection, SimulateConfig,
};
use crate::error::{CliError, Verdict};
use crate::output::{Format, Outputs};

#[derive(Parser)]
#[command(name = "arw", version, about = "Activated random walk experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact identities of the site-wise construction on random instances.
    AbelianCheck(Common),
    /// Classify densities with the totally asymmetric recursion.
    CriticalScan(Common),
    /// Rescaled flux through the origin against the Brownian maximum.
    FlowScaling(Common),
    /// Censored fixation indicators, mass transport, odometer growth.
    FixationProbe(Common),
    /// One run with an observable dump.
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run.master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides `run.workers`.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; overrides `run.out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Format of the table outputs; the report is always JSON.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

trait HasRun {
    fn run_section(&self) -> &RunSection;
}

macro_rules! has_run {
    ($($t:ty),*) => { $(impl HasRun for $t { fn run_section(&self) -> &RunSection { &self.run } })* };
}
has_run!(
    AbelianConfig,
    CriticalConfig,
    FixationConfig,
    FlowConfig,
    SimulateConfig
);

fn execute<T: DeserializeOwned + HasRun>(
    name: &'static str,
    args: &Common,
    body: fn(&T, &mut Ctx) -> Result<Verdict, CliError>,
) -> Result<Verdict, CliError> {
    let loaded = config::load::<T>(&args.config)?;
    let run = loaded.config.run_section();
    let seed = args.seed.unwrap_or(run.master_seed);
    let workers = args
        .workers
        .or(run.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(CliError::Config("workers must be >= 1".into()));
    }
    let dir = args
        .out
        .clone()
        .or_else(|| run.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&run.name));
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let out = Outputs::create(
        &dir,
        args.format,
        name,
        &loaded.path,
        &loaded.bytes,
        seed,
        workers,
    )?;
    let mut ctx = Ctx {
        seed: SeedSpec::new(seed, 0),
        out,
    };
    let verdict = body(&loaded.config, &mut ctx)?;
    ctx.out.finish(verdict.code())?;
    eprintln!(
        "{name}: {} ({})",
        match verdict {
            Verdict::Pass => "PASS",
            Verdict::Violation => "FAIL",
            Verdict::BudgetExceeded => "BUDGET EXCEEDED",
        },
        dir.display()
    );
    Ok(verdict)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::AbelianCheck(a) => execute("abelian-check", a, commands::abelian::run),
        Command::CriticalScan(a) => execute("critical-scan", a, commands::critical::run),
        Command::FlowScaling(a) => execute("flow-scaling", a, commands::flow::run),
        Command::FixationProbe(a) => execute("fixation-probe", a, commands::fixation::run),
        Command::Simulate(a) => execute("simulate", a, commands::simulate::run),
    };
    match result {
        Ok(v) => ExitCode::from(v.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
