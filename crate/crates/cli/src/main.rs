//! `sparsecity` command-line harness.
//!
//! Every command writes its result to `--out` (or stdout) and, when writing
//! to a file, an `<out>.manifest.json` sidecar holding the experiment
//! manifest. CSV rows and JSON documents carry the manifest hash.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sparsecity::Error;
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Argument(String),
    /// Already reported by the argument parser.
    #[error("invalid arguments")]
    Usage,
    #[error(transparent)]
    Library(#[from] Error),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("solver did not converge ({0}); result written with its status")]
    SolverFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Argument(_) | CliError::Usage => 2,
            CliError::Library(e) => match e {
                Error::Budget { .. } | Error::Size { .. } => 3,
                Error::Domain(_)
                | Error::Shape { .. }
                | Error::InvalidDimensions(_)
                | Error::Index(_)
                | Error::Distribution(_)
                | Error::Degenerate(_)
                | Error::Overflow { .. } => 2,
                _ => 1,
            },
            CliError::Io { .. } => 1,
            CliError::SolverFailed(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sparsecity", version, about = "Structured random measurement matrices: generation, RIP diagnostics, recovery and embedding experiments")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads for parallel loops; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// `key = value` file supplying flag defaults (flags given on the command line win).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Construct a matrix and write its manifest, optionally a dense dump.
    Gen(GenArgs),
    /// Restricted isometry diagnostics.
    Rip(RipArgs),
    /// Recover one random sparse signal.
    Recover(RecoverArgs),
    /// Success rate over a sparsity grid.
    Phase(PhaseArgs),
    /// Distortion or sparse-representation classification experiments.
    Embed(EmbedArgs),
    /// Construct a baseline ensemble and report its column norms.
    Baseline(BaselineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    SparseCity,
    SubsampledFourier,
    SubsampledHadamard,
    PartialToeplitz,
    PartialCirculant,
    RandomDemodulator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dist {
    FourPoint,
    Rademacher,
}

#[derive(Debug, Clone, Args)]
pub struct MatrixArgs {
    /// Matrix family.
    #[arg(long, value_enum, default_value = "sparse-city")]
    pub kind: Kind,
    /// Rows (a power of two for sparse-city; R for the demodulator).
    #[arg(long)]
    pub m: usize,
    /// Walsh columns per block for sparse-city; total columns (W for the demodulator) otherwise.
    #[arg(long)]
    pub n: usize,
    /// Number of blocks (sparse-city only).
    #[arg(long, default_value_t = 1)]
    pub b: usize,
    /// Matrix seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Distribution of the block signs (sparse-city only).
    #[arg(long, value_enum, default_value = "four-point")]
    pub dist: Dist,
    /// Keep the four-point law on {+-1, +-3} without the 1/sqrt(5) scaling.
    #[arg(long)]
    pub unnormalized: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Also dump the dense matrix as CSV.
    #[arg(long, value_name = "FILE")]
    pub dense: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RipMode {
    Exact,
    MonteCarlo,
    Scan,
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct RipArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: RipMode,
    /// Sparsity level.
    #[arg(long)]
    pub s: usize,
    /// Sampled supports (monte-carlo) or matrices per grid point (scan, tail).
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    /// Supports sampled per matrix when scan/tail fall back to monte-carlo.
    #[arg(long, default_value_t = 2000)]
    pub mc_trials: usize,
    /// Largest number of supports enumerated exactly.
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u128,
    /// Scan grid as `m:n:b` triples separated by commas; defaults to the matrix flags.
    #[arg(long)]
    pub grid: Option<String>,
    /// Threshold for the tail estimate.
    #[arg(long, default_value_t = 0.8)]
    pub delta: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Omp,
    Iht,
    Bp,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "omp")]
    pub solver: Solver,
    /// IHT step size.
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Iteration cap for IHT and basis pursuit (defaults 500 and 10000).
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, default_value_t = 1e-7)]
    pub tol_primal: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol_dual: f64,
    /// Basis pursuit soft-threshold level; 0.1 * ||A^T y||_inf when absent.
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RecoverArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Sparsity of the random signal.
    #[arg(long)]
    pub s: usize,
    /// Seed of the signal (support and +-1 amplitudes).
    #[arg(long, default_value_t = 1)]
    pub signal_seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Comma-separated sparsity levels.
    #[arg(long)]
    pub s_grid: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbedMode {
    Distortion,
    Classify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SrcSolverName {
    Omp,
    Bp,
}

#[derive(Debug, Clone, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, value_enum, default_value = "distortion")]
    pub mode: EmbedMode,
    /// Projected dimension; classification runs unprojected when absent.
    #[arg(long)]
    pub m: Option<usize>,
    /// Walsh columns per block of the projector; ambient dim = n * b.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub b: Option<usize>,
    /// Ambient dimension (must equal n * b when projecting).
    #[arg(long, default_value_t = 128)]
    pub ambient: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Distortion: number of random points.
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    /// Distortion: pairs above this count as violations.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Classification: number of classes.
    #[arg(long, default_value_t = 5)]
    pub classes: usize,
    #[arg(long, default_value_t = 4)]
    pub subspace_dim: usize,
    #[arg(long, default_value_t = 10)]
    pub samples_per_class: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, value_enum, default_value = "omp")]
    pub solver: SrcSolverName,
    /// Skip unit-norm scaling of the dictionary columns.
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Also dump the dense matrix as CSV.
    #[arg(long, value_name = "FILE")]
    pub dense: Option<String>,
}

fn run(raw: Vec<String>) -> Result<(), CliError> {
    let args = config::expand(raw)?;
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if code == 0 {
                return Ok(());
            }
            return Err(CliError::Usage);
        }
    };
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CliError::Argument("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Argument(format!("cannot size thread pool: {e}")))?;
    }
    match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Rip(a) => commands::rip(&a),
        Command::Recover(a) => commands::recover(&a),
        Command::Phase(a) => commands::phase(&a),
        Command::Embed(a) => commands::embed(&a),
        Command::Baseline(a) => commands::baseline(&a),
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
