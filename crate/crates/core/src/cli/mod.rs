//! Command-line front end.
//!
//! Every command reads its inputs, writes JSON/CSV artifacts into the output
//! directory and returns an exit code: 0 for a successful, certified run, 2
//! for bad input or flags, 3 for solver or numeric failures (including a
//! fit that fails its characterization check).

mod commands;
pub mod io;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::simulation::log_spaced_sizes;

pub use commands::{cmd_argmin, cmd_check, cmd_fit, cmd_invelope, cmd_rates};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "CONVEXREG_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Fit a CSV of `x,y` and certify the result.
    Fit,
    /// Check a CSV of `x,y,fitted` against the optimality conditions.
    Check,
    /// Log-bias rate-of-convergence study.
    Rates,
    /// Discrete invelope simulation.
    Invelope,
    /// Argmin estimator study.
    Argmin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Mean `2 (x - 0.5)^r`.
    Vanishing,
    /// Mean `2 (x - 0.5)`.
    Affine,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "convexreg", version, about = "Convex least-squares regression on [0, 1]")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Input CSV (`fit`: x,y; `check`: x,y,fitted).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub output: PathBuf,
    /// Normalised tolerance for the optimality conditions.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Replicates per sample size, or paths for `invelope`.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    /// Order of the first nonvanishing derivative (even).
    #[arg(long)]
    pub r: Option<u32>,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = Scenario::Vanishing)]
    pub scenario: Scenario,
    /// Half-width of the canonical invelope grid.
    #[arg(long, default_value_t = 4.0)]
    pub c: f64,
    /// Invelope grid size.
    #[arg(long, default_value_t = 2000)]
    pub m: usize,
    /// Evaluation point.
    #[arg(long)]
    pub x0: Option<f64>,
    /// `invelope`: also run each path on a grid twice as fine.
    #[arg(long)]
    pub refine: bool,
    /// `rates`: 200 replicates over 30 sizes instead of 100 over 10.
    #[arg(long)]
    pub paper_grid: bool,
    /// Cap on solver iterations (default 50 n).
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

/// Flags with every default resolved; embedded in all artifacts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    #[serde(skip)]
    pub output: PathBuf,
    pub tol: f64,
    pub seed: u64,
    pub replicates: usize,
    pub n_grid: Vec<usize>,
    pub r: u32,
    pub sigma: f64,
    pub scenario: Scenario,
    pub c: f64,
    pub m: usize,
    pub x0: f64,
    pub refine: bool,
    pub paper_grid: bool,
    pub max_iterations: Option<usize>,
}

impl RunConfig {
    pub fn resolve(args: &Args) -> Result<Self, CliError> {
        let replicates = args.replicates.unwrap_or(match args.command {
            Command::Invelope => 500,
            Command::Rates if args.paper_grid => 200,
            _ => 100,
        });
        let n_grid = match (&args.n_grid, args.command) {
            (Some(g), _) => g.clone(),
            (None, Command::Rates) if args.paper_grid => log_spaced_sizes(500, 10_000, 30),
            (None, Command::Rates) => log_spaced_sizes(500, 10_000, 10),
            (None, Command::Argmin) => vec![1000, 4000, 16000],
            (None, _) => Vec::new(),
        };
        let r = args.r.unwrap_or(match args.command {
            Command::Rates => 4,
            _ => 2,
        });
        let needs_input = matches!(args.command, Command::Fit | Command::Check);
        if needs_input && args.input.is_none() {
            return Err(CliError::Input("--input is required for this command".into()));
        }
        if !(args.tol > 0.0 && args.tol.is_finite()) {
            return Err(CliError::Input(format!("--tol must be positive, got {}", args.tol)));
        }
        Ok(Self {
            command: args.command,
            input: args.input.clone(),
            output: args.output.clone(),
            tol: args.tol,
            seed: args.seed,
            replicates,
            n_grid,
            r,
            sigma: args.sigma,
            scenario: args.scenario,
            c: args.c,
            m: args.m,
            x0: args.x0.unwrap_or(0.5),
            refine: args.refine,
            paper_grid: args.paper_grid,
            max_iterations: args.max_iterations,
        })
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("solver failure: {message} (trace written to {})", trace_path.display())]
    Solver { message: String, trace_path: PathBuf },
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Solver { .. } | CliError::Numeric(_) => 3,
        }
    }
}

/// Result of a completed command.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// Whether the run's certificate or check passed.
    pub passed: bool,
    pub summary: String,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            3
        }
    }
}

/// Runs one command, inside a pool capped by `CONVEXREG_THREADS` when set.
pub fn run(args: &Args) -> Result<RunOutcome, CliError> {
    let config = RunConfig::resolve(args)?;
    std::fs::create_dir_all(&config.output).map_err(|e| {
        CliError::Io(format!("cannot create {}: {e}", config.output.display()))
    })?;
    let exec = || match config.command {
        Command::Fit => cmd_fit(&config),
        Command::Check => cmd_check(&config),
        Command::Rates => cmd_rates(&config),
        Command::Invelope => cmd_invelope(&config),
        Command::Argmin => cmd_argmin(&config),
    };
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let threads: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&t| t > 0)
                .ok_or_else(|| CliError::Input(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
            pool.install(exec)
        }
        Err(_) => exec(),
    }
}

/// Parses `argv`, runs, reports to stdout/stderr and returns the exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&args) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if !outcome.passed {
                eprintln!("certificate check failed");
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
