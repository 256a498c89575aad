//! `sparsedict` command-line tool.
//!
//! Exit codes: 0 on success (or convergence), 2 when a solver stopped at its
//! iteration cap, 1 on any error, usage error or failed verification.

mod commands;
mod csv;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "sparsedict", version, about = "Dictionary learning for sparse representation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn a dictionary and sparse codes from a CSV training matrix.
    Learn(LearnArgs),
    /// Minimize ‖X‖₁ subject to ½‖Y − AX‖²_F ≤ α and ‖A‖²_F ≤ β.
    ConstrainedFit(ConstrainedFitArgs),
    /// Denoise a PGM image.
    Denoise(DenoiseArgs),
    /// Verify the densest-cut reduction claims on a small graph.
    Hardness(HardnessArgs),
    /// PSNR table over a grid of noise levels for every learner.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Iteration cap.
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    /// Relative objective-decrease tolerance.
    #[arg(long, default_value_t = 1e-8, value_parser = positive)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LearnArgs {
    /// Training matrix (headerless CSV, one signal per column).
    #[arg(long)]
    input: PathBuf,
    /// Constraint regime: 1 ‖A‖²_F ≤ β, 2 ‖aᵢ‖² ≤ βᵢ, 3 nonnegative with ‖A‖²_F ≤ β,
    /// 4 nonnegative with ‖aᵢ‖₁ ≤ θ.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    case: u8,
    /// Number of atoms (defaults to the signal dimension).
    #[arg(long)]
    atoms: Option<usize>,
    #[arg(long, value_parser = positive)]
    beta: Option<f64>,
    /// Per-atom bounds for case 2, comma-separated.
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    #[arg(long, value_parser = positive)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 0.1, value_parser = non_negative)]
    lambda: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct ConstrainedFitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    atoms: Option<usize>,
    #[arg(long, value_parser = positive)]
    beta: f64,
    #[arg(long, value_parser = positive)]
    alpha: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LearnerArg {
    Alg2,
    Ksvd,
    Dct,
}

#[derive(Debug, Args)]
struct DenoiseOptions {
    /// Learner iterations.
    #[arg(long, default_value_t = 10)]
    iters: usize,
    #[arg(long, default_value_t = 256)]
    atoms: usize,
    #[arg(long, default_value_t = 8)]
    patch: usize,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Learn on raw patches instead of mean-subtracted ones.
    #[arg(long)]
    keep_dc: bool,
}

#[derive(Debug, Args)]
struct DenoiseArgs {
    /// Clean PGM image (noise is added), or a noisy one with --pre-noised.
    image: PathBuf,
    #[arg(long, value_parser = positive)]
    sigma: f64,
    /// Monte Carlo repetitions with independent noise.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// The image already contains noise of level σ.
    #[arg(long)]
    pre_noised: bool,
    #[arg(long, value_enum, default_value_t = LearnerArg::Alg2)]
    learner: LearnerArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    options: DenoiseOptions,
}

#[derive(Debug, Args)]
struct HardnessArgs {
    /// Edge-list file: first line N, then one "u v" pair per line.
    graph: PathBuf,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Clean PGM image.
    image: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = vec![20.0, 60.0, 100.0, 140.0, 180.0], value_parser = positive)]
    sigmas: Vec<f64>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    options: DenoiseOptions,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be non-negative"))
    }
}

/// Result of a successfully executed command.
pub enum Outcome {
    Success,
    MaxIters,
    /// A verification ran but did not pass.
    Failed,
}

fn configure_threads() -> Result<(), String> {
    let threads = match std::env::var("SPARSEDICT_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| format!("SPARSEDICT_THREADS must be a positive integer, got '{v}'"))?,
        Err(_) => 1,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
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
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Learn(a) => commands::learn(a),
        Command::ConstrainedFit(a) => commands::constrained_fit(a),
        Command::Denoise(a) => commands::denoise(a),
        Command::Hardness(a) => commands::hardness(a),
        Command::Bench(a) => commands::bench(a),
    });
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::MaxIters) => ExitCode::from(2),
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
