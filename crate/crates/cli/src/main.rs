//! `splinemetric`: smoothing, metric transforms, synthetic data and
//! repeated-split benchmarks from the command line.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "splinemetric", version, about = "Derivative-aware metrics for sampled curves")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Replace each curve by its smoothing spline sampled on the grid.
    Smooth(SmoothArgs),
    /// Map each curve to R x so Euclidean geometry matches the Sobolev one.
    Transform(TransformArgs),
    /// Run a repeated-split benchmark described by a TOML config.
    Benchmark(BenchmarkArgs),
    /// Write a synthetic dataset of random trigonometric curves.
    Synth(SynthArgs),
    /// Add i.i.d. Gaussian noise to every sampled value.
    Noise(NoiseArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Input CSV: one curve per row plus a target column.
    pub input: PathBuf,
    /// Target column: `last`, a zero-based index, or a header name.
    #[arg(long, default_value = "last")]
    pub target: String,
    #[arg(long, value_enum, default_value_t = TaskArg::Regression)]
    pub task: TaskArg,
    /// Keep the abscissae as given instead of mapping them onto [0, 1].
    #[arg(long)]
    pub no_rescale: bool,
    /// File with one abscissa per line, overriding the CSV header.
    #[arg(long)]
    pub grid_file: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum TaskArg {
    Regression,
    Classification,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaArg {
    Auto,
    Value(f64),
}

fn parse_lambda(s: &str) -> Result<LambdaArg, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(LambdaArg::Auto);
    }
    let v: f64 = s.parse().map_err(|_| format!("expected a number or `auto`, got {s:?}"))?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(format!("lambda must be finite and >= 0, got {v}"));
    }
    Ok(LambdaArg::Value(v))
}

fn parse_order(s: &str) -> Result<usize, String> {
    match s {
        "1" => Ok(1),
        "2" => Ok(2),
        _ => Err(format!("order must be 1 or 2, got {s:?}")),
    }
}

#[derive(Args, Debug, Clone)]
pub struct SplineArgs {
    /// Derivative order of the penalty.
    #[arg(long, value_parser = parse_order, default_value = "2")]
    pub m: usize,
    /// Smoothing level, or `auto` for leave-one-out selection over all rows.
    #[arg(long, value_parser = parse_lambda, default_value = "auto", allow_hyphen_values = true)]
    pub lambda: LambdaArg,
    /// Comma-separated candidates for `--lambda auto`.
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct SmoothArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub spline: SplineArgs,
    #[arg(long, short)]
    pub output: PathBuf,
    /// Comma-separated evaluation points on the (rescaled) axis.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "probe_output")]
    pub probe: Option<Vec<f64>>,
    /// Derivative order at the probe points.
    #[arg(long, default_value_t = 0)]
    pub deriv: usize,
    #[arg(long, requires = "probe")]
    pub probe_output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TransformArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub spline: SplineArgs,
    #[arg(long, short)]
    pub output: PathBuf,
    /// Undo a previous transform (needs the numeric lambda it used).
    #[arg(long)]
    pub invert: bool,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// TOML run configuration.
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of random splits.
    #[arg(long)]
    pub splits: Option<usize>,
    /// JSON report path.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// CSV summary path.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum RuleArg {
    Mean,
    DerivEnergy,
    SignOfDerivEnergy,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    /// Uniform grid size.
    #[arg(long, default_value_t = 100)]
    pub p: usize,
    /// Random harmonics per curve.
    #[arg(long, default_value_t = 3, conflicts_with_all = ["sin", "cos"])]
    pub terms: usize,
    /// Fixed sine coefficients shared by all curves.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sin: Option<Vec<f64>>,
    /// Fixed cosine coefficients shared by all curves.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub cos: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = RuleArg::DerivEnergy)]
    pub rule: RuleArg,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub sd: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPLINEMETRIC_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Smooth(a) => commands::smooth(&a),
        Command::Transform(a) => commands::transform(&a),
        Command::Benchmark(a) => commands::benchmark(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Noise(a) => commands::noise(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
