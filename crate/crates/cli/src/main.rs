use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Markov-modulated infinite-server queues: extremal analysis, densities,
/// exact asymptotics and rare-event simulation.
#[derive(Debug, Parser)]
#[command(name = "mmisq", version)]
struct Cli {
    /// Worker threads for simulation.
    #[arg(long, global = true, env = "MMISQ_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model file and print its stationary law.
    Validate(ModelArgs),
    /// Extremal paths, curvature coefficients, prefactors and atoms.
    Analyze(AnalyzeArgs),
    /// Solve the density PDE and write the grid as CSV.
    Pde(PdeArgs),
    /// Exact asymptotics of the exceedance probability.
    Asymptotics(AsymptoticsArgs),
    /// Estimate one exceedance probability by simulation.
    Simulate(SimulateArgs),
    /// Estimate the exceedance probability over a range of N.
    Sweep(SweepArgs),
    /// Empirical distribution of the Poisson parameter.
    Dist(DistArgs),
    /// Smallest server count keeping the exceedance probability below eps.
    Capacity(CapacityArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Model file (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    io: ModelArgs,
    /// Horizon.
    #[arg(long)]
    t: f64,
}

/// A model file with a horizon, or a saved `analyze` report.
#[derive(Debug, Args)]
struct Source {
    /// Model file (JSON).
    #[arg(
        long,
        required_unless_present = "precomputed",
        conflicts_with = "precomputed"
    )]
    model: Option<PathBuf>,
    /// Horizon; taken from the report with --precomputed.
    #[arg(
        long,
        required_unless_present = "precomputed",
        conflicts_with = "precomputed"
    )]
    t: Option<f64>,
    /// Output of `analyze` to reuse instead of --model and --t.
    #[arg(long)]
    precomputed: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Upwind,
    Characteristic,
}

#[derive(Debug, Args)]
struct PdeArgs {
    #[command(flatten)]
    io: ModelArgs,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 0.0)]
    a_min: f64,
    /// Upper end of the grid; 1.05 times the attainable maximum by default.
    #[arg(long)]
    a_max: Option<f64>,
    /// Number of cells.
    #[arg(long, default_value_t = 2048)]
    n_a: usize,
    /// Number of time steps; derived from the stability bound by default.
    #[arg(long)]
    n_t: Option<usize>,
    /// Defaults to characteristic for variant II and upwind for variant I.
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Stored time slices, including both ends.
    #[arg(long, default_value_t = 5)]
    snapshots: usize,
    /// Metadata file; `<out>.json` by default.
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AsymptoticsArgs {
    #[command(flatten)]
    src: Source,
    /// Level per unit of N.
    #[arg(long)]
    a: f64,
    /// Values of N: a list `20,40` or a range `start:stop:step`.
    #[arg(long = "N", default_value = "20:300:20")]
    n: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Naive,
    Is,
    Combined,
}

#[derive(Debug, Args)]
struct SimArgs {
    /// Runs (per measure for the tube estimators).
    #[arg(long, default_value_t = 100_000)]
    runs: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Half-width of the sojourn windows of the tube.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    src: Source,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long = "N")]
    n: f64,
    #[arg(long)]
    a: f64,
    #[arg(long, value_enum, default_value_t = Method::Is)]
    method: Method,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    src: Source,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long)]
    a: f64,
    #[arg(long = "N", default_value = "20:300:20")]
    n: String,
    #[arg(long, value_enum, default_value_t = Method::Is)]
    method: Method,
}

#[derive(Debug, Args)]
struct DistArgs {
    #[command(flatten)]
    io: ModelArgs,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 1_000_000)]
    runs: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of evaluation points across the attainable range.
    #[arg(long, default_value_t = 401)]
    points: usize,
    /// Add the CDF from the PDE solution as a third column.
    #[arg(long)]
    pde: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CapacityModeArg {
    Simulation,
    Asymptotic,
}

#[derive(Debug, Args)]
struct CapacityArgs {
    #[command(flatten)]
    src: Source,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long = "N")]
    n: f64,
    #[arg(long)]
    eps: f64,
    /// Upper end of the level bracket; twice the attainable maximum by default.
    #[arg(long)]
    a_hi: Option<f64>,
    #[arg(long, value_enum, default_value_t = CapacityModeArg::Simulation)]
    mode: CapacityModeArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(3);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
