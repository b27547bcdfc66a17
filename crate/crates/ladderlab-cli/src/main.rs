//! Command-line front end: configuration, caching, sweeps and report
//! emission for the spectral-geometry laboratory.
//!
//! Exit codes: 0 success, 2 validation failure, 3 incomplete or corrupt
//! cached data, 4 numerical failure.

// `!(x > 0.0)` guards deliberately reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cache;
mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use ladderlab::LadderError;

use config::{MassRange, OutputFormat, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad inputs: malformed config, invalid metric, inadmissible request.
    Validation(String),
    /// Requested data beyond completeness guarantees.
    Incomplete(String),
    /// Cache integrity problems (hash mismatch, foreign manifest).
    Cache(String),
    /// Numerical failure inside a solver or integrator.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Incomplete(_) | CliError::Cache(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation failure: {m}"),
            CliError::Incomplete(m) => write!(f, "incomplete data: {m}"),
            CliError::Cache(m) => write!(f, "cache error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<LadderError> for CliError {
    fn from(e: LadderError) -> Self {
        match e {
            LadderError::Domain(_)
            | LadderError::Invariant(_)
            | LadderError::Precondition(_)
            | LadderError::EmptyLadder(_)
            | LadderError::Unsupported(_)
            | LadderError::Resolution(_) => CliError::Validation(e.to_string()),
            LadderError::Incomplete(_) | LadderError::Capacity(_) => {
                CliError::Incomplete(e.to_string())
            }
            LadderError::Accuracy(_)
            | LadderError::NonrealSpectrum(_)
            | LadderError::Solver(_)
            | LadderError::Integration(_)
            | LadderError::Stiffness(_)
            | LadderError::Fit(_) => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "ladderlab",
    version,
    about = "Joint Klein-Gordon spectra and ladder Weyl laws on stationary spacetimes"
)]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Ladder slope nu (repeatable).
    #[arg(long = "nu", global = true)]
    nu: Vec<f64>,

    /// Mass sweep as A:B:STEP.
    #[arg(long, global = true)]
    mass_range: Option<String>,

    /// Sharp-window half-width C.
    #[arg(long = "window", global = true)]
    window_c: Option<f64>,

    /// Support radius of the test-function transform.
    #[arg(long, global = true)]
    psi_hat_radius: Option<f64>,

    /// Abel regularization sweep, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    eps_sweep: Vec<f64>,

    /// Master seed for Monte Carlo streams.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Spectrum cache directory (overrides LADDERLAB_CACHE and the config).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    /// Output directory for reports and CSV files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Count both eigenvalue branches (predictions double).
    #[arg(long, global = true)]
    include_negative_branch: bool,

    /// Include the flagged zero-mode sector in counts.
    #[arg(long, global = true)]
    include_zero_modes: bool,

    /// Table output format.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute and cache joint-spectrum slices over the mass sweep.
    Spectrum,
    /// Sharp and smoothed ladder counts with Weyl predictions.
    Count,
    /// End-to-end sharp Weyl verification: spectra, counts, volume, fit.
    VerifyWeyl,
    /// Generating-function sweep with peak detection.
    Upsilon,
    /// Liouville volume by all available methods, side by side.
    Volume,
    /// Integrate the mass-shell flow and emit the trajectory.
    Flow,
    /// Classify ladder slopes against the critical levels.
    Admissible,
}

fn merge(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Ok(env_cache) = std::env::var("LADDERLAB_CACHE") {
        if !env_cache.is_empty() {
            cfg.cache_dir = Some(PathBuf::from(env_cache));
        }
    }
    if !cli.nu.is_empty() {
        cfg.nu = cli.nu.clone();
    }
    if let Some(range) = &cli.mass_range {
        cfg.mass_range = MassRange::parse(range)?;
    }
    if let Some(c) = cli.window_c {
        cfg.window_c = c;
    }
    if let Some(r) = cli.psi_hat_radius {
        cfg.psi_hat_radius = r;
    }
    if !cli.eps_sweep.is_empty() {
        cfg.eps_sweep = cli.eps_sweep.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.cache_dir {
        cfg.cache_dir = Some(dir.clone());
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    if cli.include_negative_branch {
        cfg.include_negative_branch = true;
    }
    if cli.include_zero_modes {
        cfg.include_zero_modes = true;
    }
    if let Some(fmt) = cli.format {
        cfg.format = fmt;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = merge(&cli)?;
    let ctx = commands::Context::new(cfg)?;
    match cli.command {
        Command::Spectrum => commands::cmd_spectrum(&ctx),
        Command::Count => commands::cmd_count(&ctx),
        Command::VerifyWeyl => commands::cmd_verify_weyl(&ctx),
        Command::Upsilon => commands::cmd_upsilon(&ctx),
        Command::Volume => commands::cmd_volume(&ctx),
        Command::Flow => commands::cmd_flow(&ctx),
        Command::Admissible => commands::cmd_admissible(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
