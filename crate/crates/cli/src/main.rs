//! `spectral-descent`: solve eigenproblems from CSV files, compute grid
//! Laplacian eigenfunctions, and run the update-rule and timing
//! experiments.

mod commands;
mod config;
mod error;
mod io;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ConfigFile;
use crate::error::{CliError, CliResult};
use crate::manifest::Status;

/// Environment variable overriding the worker pool size.
pub const THREADS_ENV: &str = "SPECTRAL_DESCENT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "spectral-descent", version, about = "Eigensolvers built on an unconstrained quadratic functional")]
struct Cli {
    /// Worker threads for trial fan-out (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// `key = value` settings file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Smallest eigenpairs of a matrix or a symmetric pencil.
    Solve(SolveArgs),
    /// Eigenfunctions of the Dirichlet Laplacian on a grid domain.
    Laplacian(LaplacianArgs),
    /// Compare the norm-based and Rayleigh eigenvalue updates from shared starts.
    Compare(CompareArgs),
    /// Time deflated flow against the two Newton variants from warm starts.
    Bench(BenchArgs),
    /// Reference dense eigensolver.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Gd,
    GdB,
    Newton,
    Rqi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridMethod {
    Flow,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CompareMode {
    Matrix,
    Grid,
}

/// A numeric flag that also accepts `auto`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AutoOr {
    Auto,
    Value(f64),
}

impl std::str::FromStr for AutoOr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(AutoOr::Auto);
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(AutoOr::Value)
            .ok_or_else(|| format!("expected a number or `auto`, got `{s}`"))
    }
}

impl std::fmt::Display for AutoOr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AutoOr::Auto => f.write_str("auto"),
            AutoOr::Value(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// SPD right-hand matrix of the pencil (identity when absent).
    #[arg(long)]
    pub b: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub gamma: Option<AutoOr>,
    #[arg(long)]
    pub alpha: Option<AutoOr>,
    /// Number of eigenpairs (gradient methods only).
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Gradient tolerance (gd, gd-b) or residual tolerance (newton, rqi).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LaplacianArgs {
    /// `square`, `l-shape`, `annulus:RIN:ROUT` or `file:PATH`.
    #[arg(long)]
    pub domain: Option<String>,
    /// Points per side (ignored for `file:` domains).
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<GridMethod>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Time step; defaults to 0.17·h².
    #[arg(long)]
    pub dt: Option<f64>,
    /// Residual tolerance in stencil units.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_enum)]
    pub mode: Option<CompareMode>,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Matrix size (matrix mode).
    #[arg(long)]
    pub n: Option<usize>,
    /// Points per side of the l-shape (grid mode).
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub count: Option<usize>,
    /// Warm-start residual in the discrete L² norm.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum OracleCommand {
    /// Print the (generalized) spectrum in ascending order.
    Eigh(EighArgs),
}

#[derive(Debug, Args)]
pub struct EighArgs {
    #[arg(long = "matrix", value_name = "MATRIX")]
    pub matrix_flag: Option<PathBuf>,
    #[arg(value_name = "MATRIX_FILE", conflicts_with = "matrix_flag")]
    pub matrix_pos: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
}

fn thread_count(cli: Option<usize>, config: &ConfigFile) -> CliResult<Option<usize>> {
    if cli.is_some() {
        return Ok(cli);
    }
    if let Ok(v) = std::env::var(THREADS_ENV) {
        return v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::usage(format!("{THREADS_ENV}: invalid value `{v}`")));
    }
    config.get("threads")
}

fn run(cli: Cli, argv: Vec<String>) -> CliResult<Status> {
    let config = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    if let Some(n) = thread_count(cli.threads, &config)? {
        if n == 0 {
            return Err(CliError::usage("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    match cli.command {
        Command::Solve(a) => commands::solve::run(&a, &config, argv),
        Command::Laplacian(a) => commands::laplacian::run(&a, &config, argv),
        Command::Compare(a) => commands::compare::run(&a, &config, argv),
        Command::Bench(a) => commands::bench::run(&a, &config, argv),
        Command::Oracle(OracleCommand::Eigh(a)) => commands::oracle::run(&a),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(CliError::EXIT_USAGE as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli, argv) {
        Ok(Status::Complete) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(2),
        Ok(Status::Failed) => ExitCode::from(CliError::EXIT_ERROR as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
