//! `social-sampler`: simulation sweeps, model fitting, cross-validated model
//! comparison, synthetic markets and trade-log ingestion.
//!
//! Exit codes: 0 success, 2 input error, 3 resource cap, 4 numeric failure.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::commands::OutDir;
use crate::config::{RunManifest, MANIFEST_FILE};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "social-sampler",
    version,
    about = "Social-sampling simulations, fitting and evaluation"
)]
struct Cli {
    /// JSON config file, or a manifest from an earlier run to replay it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the config's seed (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "SOCIAL_SAMPLER_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a simulation sweep; writes sweep.csv and sweep.json.
    Simulate(SimulateArgs),
    /// Fit one model family to a panel; writes fit.json.
    Fit(FitArgs),
    /// Cross-validate model families; writes report, binned and regression files.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic market; writes trades.csv, panel.csv, truth.json.
    Synth(SynthArgs),
    /// Turn a trade log into a panel; writes panel.csv and diagnostics.
    Ingest(IngestArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Fit(_) => "fit",
            Command::Evaluate(_) => "evaluate",
            Command::Synth(_) => "synth",
            Command::Ingest(_) => "ingest",
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Overrides the config's repetitions per cell.
    #[arg(long)]
    pub repetitions: Option<u32>,
    /// Overrides the config's cap on grid cells.
    #[arg(long)]
    pub max_cells: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Panel CSV (day,user_id,performance,prev_popularity,new_mimickers,lost_mimickers).
    #[arg(long)]
    pub panel: Option<PathBuf>,
    /// social_sampling, performance, popularity, additive,
    /// performance_regression or full_regression.
    #[arg(long)]
    pub family: Option<String>,
    /// Fixed popularity exponent for the social-sampling family.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Comma-separated exponents; writes gamma_profile.csv.
    #[arg(long, value_delimiter = ',')]
    pub gamma_profile: Option<Vec<f64>>,
    /// Rank traders in --trades and write skill_intervals.csv.
    #[arg(long)]
    pub skill_intervals: bool,
    /// Trade-log CSV used for skill intervals.
    #[arg(long)]
    pub trades: Option<PathBuf>,
    /// Credible level for skill intervals (default 0.95).
    #[arg(long)]
    pub skill_level: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Panel CSV to cross-validate.
    #[arg(long)]
    pub panel: Option<PathBuf>,
    /// Comma-separated families to compare (default: all six).
    #[arg(long, value_delimiter = ',')]
    pub families: Option<Vec<String>>,
    /// by_user, by_day or temporal.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Held-out row fraction for the temporal scheme (default 0.1).
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Fold count for by_user and by_day (default 10).
    #[arg(long)]
    pub folds: Option<usize>,
    /// Bin set for binned.csv; only "default" is available.
    #[arg(long)]
    pub bins: Option<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of traders (default 50).
    #[arg(long)]
    pub users: Option<usize>,
    /// Number of weekdays to simulate (default 100).
    #[arg(long)]
    pub days: Option<usize>,
    /// Mimic decisions per day (default 1000).
    #[arg(long)]
    pub decisions_per_day: Option<u64>,
    /// Social-sampling generator with this η.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Popularity exponent of the generator (default 1).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Probability that a mirror relationship ends on each weekday.
    #[arg(long)]
    pub unfollow_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Trade-log CSV to ingest.
    #[arg(long)]
    pub trades: Option<PathBuf>,
    /// roi, sharpe, sortino, sum, average or percent.
    #[arg(long)]
    pub metric: Option<String>,
    /// Trailing performance window in calendar days (default 30).
    #[arg(long)]
    pub window: Option<u32>,
    /// Reconstruct missing parent trades first.
    #[arg(long)]
    pub impute: bool,
}

fn run(cli: &Cli) -> CliResult<()> {
    if cli.threads > 0 {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let started = Instant::now();
    let config = cli.config.as_deref();
    let mut out = OutDir::create(&cli.out)?;
    let record = match &cli.command {
        Command::Simulate(a) => commands::simulate(a, config, cli.seed, &mut out)?,
        Command::Fit(a) => commands::fit(a, config, cli.seed, &mut out)?,
        Command::Evaluate(a) => commands::evaluate(a, config, cli.seed, &mut out)?,
        Command::Synth(a) => commands::synth(a, config, cli.seed, &mut out)?,
        Command::Ingest(a) => commands::ingest_cmd(a, config, &mut out)?,
    };
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        config: record.config,
        seed: record.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        inputs: record.inputs,
        out_dir: cli.out.clone(),
        outputs: out.into_written(),
        diagnostics: record.diagnostics,
        duration_seconds: started.elapsed().as_secs_f64(),
    };
    write_manifest(&cli.out, &manifest)
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> CliResult<()> {
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::config(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
