//! Command-line driver: configuration, presets, commands and file output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod presets;
pub mod units;

use std::fs;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::commands::qfi::PriorCampaign;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::Artifacts;

#[derive(Debug, Parser)]
#[command(name = "qswitch", version, about = "Quantum SWITCH rotation-measurement simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Fringe,
    Estimate,
    Scaling,
    Trace,
    Qfi,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fringe => "fringe",
            Self::Estimate => "estimate",
            Self::Scaling => "scaling",
            Self::Trace => "trace",
            Self::Qfi => "qfi",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep θ, simulate counts and fit the fringe.
    Fringe(RunArgs),
    /// Run an estimation campaign at the true angle.
    Estimate(RunArgs),
    /// Campaigns over several (m, l) pairs and a log–log regression.
    Scaling(RunArgs),
    /// Stage-by-stage state trace of the optical round trip.
    Trace(RunArgs),
    /// Generator spreads, Fisher information and resource count.
    Qfi(RunArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["config", "preset"])))]
pub struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in configuration (see `qswitch presets`).
    #[arg(long)]
    pub preset: Option<String>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured trial count.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long, env = "QSWITCH_OUTPUT_DIR")]
    pub out: Option<PathBuf>,
    /// Exit with status 4 when a command's acceptance thresholds are violated.
    #[arg(long)]
    pub check: bool,
}

/// Loads the config named by `args` and applies the command-line overrides.
pub fn load_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let text = match (&args.config, &args.preset) {
        (Some(path), _) => fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        (None, Some(name)) => presets::get(name)
            .ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))?
            .to_string(),
        (None, None) => return Err(CliError::Config("either --config or --preset is required".into())),
    };
    let mut cfg = ExperimentConfig::from_toml_str(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a command without touching the filesystem.
pub fn execute(kind: Kind, cfg: &ExperimentConfig, prior: Option<PriorCampaign>) -> Result<Artifacts, CliError> {
    match kind {
        Kind::Fringe => commands::fringe::run(cfg),
        Kind::Estimate => commands::estimate::run(cfg),
        Kind::Scaling => commands::scaling::run(cfg),
        Kind::Trace => commands::trace::run(cfg),
        Kind::Qfi => commands::qfi::run(cfg, prior),
    }
}

/// [`execute`] on a dedicated pool of `workers` threads.
pub fn execute_with_workers(
    kind: Kind,
    cfg: &ExperimentConfig,
    prior: Option<PriorCampaign>,
    workers: Option<usize>,
) -> Result<Artifacts, CliError> {
    match workers {
        None => execute(kind, cfg, prior),
        Some(0) => Err(CliError::Config("--workers must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
            pool.install(|| execute(kind, cfg, prior))
        }
    }
}

/// Full run: load, execute, write every file, then apply checks.
pub fn run(kind: Kind, args: &RunArgs) -> Result<(Artifacts, Vec<PathBuf>), CliError> {
    let cfg = load_config(args)?;
    let dir = PathBuf::from(&cfg.output.dir);
    let prior = match kind {
        Kind::Qfi => fs::read(dir.join("estimate.json")).ok().and_then(|b| PriorCampaign::from_estimate_json(&b)),
        _ => None,
    };
    let artifacts = execute_with_workers(kind, &cfg, prior, args.workers)?;
    let written = artifacts.write_all(&dir)?;
    if !artifacts.failures.is_empty() {
        return Err(CliError::Check(artifacts.failures.clone()));
    }
    if args.check && !artifacts.violations.is_empty() {
        return Err(CliError::Check(artifacts.violations.clone()));
    }
    Ok((artifacts, written))
}
