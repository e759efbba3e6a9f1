mod decode;
mod evaluate;
mod io;
mod rank;

use std::path::PathBuf;
use std::process::ExitCode;

use cellbench::metrics::{BoundaryRemoval, DEFAULT_IOU_THRESHOLD};
use cellbench::ranking::{RuntimeMode, Scheme, DEFAULT_ALPHA};
use cellbench::stats::DEFAULT_REPLICATES;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Scoring, ranking and post-processing for cell instance segmentation benchmarks.
#[derive(Parser)]
#[command(name = "cellbench", version)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score prediction label maps against ground truth.
    Evaluate(EvaluateArgs),
    /// Build leaderboards from per-team metrics CSVs.
    Rank(RankArgs),
    /// Bootstrap rank stability and pairwise significance.
    Stability(StabilityArgs),
    /// Turn dense network outputs or shape predictions into label maps.
    Decode(DecodeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Both,
    Gt,
    None,
}

impl From<BoundaryArg> for BoundaryRemoval {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Both => BoundaryRemoval::Both,
            BoundaryArg::Gt => BoundaryRemoval::GtOnly,
            BoundaryArg::None => BoundaryRemoval::None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RuntimeModeArg {
    Subtract,
    Cap,
}

impl From<RuntimeModeArg> for RuntimeMode {
    fn from(m: RuntimeModeArg) -> Self {
        match m {
            RuntimeModeArg::Subtract => RuntimeMode::SubtractFloor,
            RuntimeModeArg::Cap => RuntimeMode::HardCap,
        }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of ground-truth label maps.
    #[arg(long)]
    gt: PathBuf,
    /// Prediction directory, one per team; repeatable.
    #[arg(long, required = true)]
    pred: Vec<PathBuf>,
    /// Team name for the matching --pred (defaults to the directory name).
    #[arg(long)]
    team: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
    iou_threshold: f64,
    /// Accept IoU equal to the threshold.
    #[arg(long)]
    inclusive: bool,
    #[arg(long, value_enum, default_value = "both")]
    boundary: BoundaryArg,
}

#[derive(Args)]
struct TableArgs {
    /// Metrics CSV files, or directories holding `metrics_*.csv`.
    #[arg(required = true)]
    metrics: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "subtract")]
    runtime_mode: RuntimeModeArg,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    table: TableArgs,
    #[arg(long, default_value = "rank_then_mean")]
    scheme: Scheme,
    /// Also compare all five schemes.
    #[arg(long)]
    all_schemes: bool,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    table: TableArgs,
    #[arg(long, default_value = "rank_then_mean")]
    scheme: Scheme,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq, Debug)]
enum Algorithm {
    Flow,
    Watershed,
    Starpoly,
    Contour,
}

#[derive(Args)]
struct DecodeArgs {
    /// Input files: dense maps for flow/watershed, JSON for starpoly/contour.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    algorithm: Algorithm,
    #[arg(long)]
    out: PathBuf,
    /// Skip the small-cell filter.
    #[arg(long)]
    keep_small: bool,
    /// Foreground threshold on the probability channel (flow, watershed).
    #[arg(long, default_value_t = 0.5)]
    prob_threshold: f32,
    /// Marker threshold on the distance channel (watershed).
    #[arg(long, default_value_t = 0.5)]
    marker_threshold: f32,
    /// Euler steps for flow tracking.
    #[arg(long, default_value_t = 200)]
    flow_iterations: usize,
    /// NMS overlap threshold (starpoly, contour).
    #[arg(long, default_value_t = 0.5)]
    nms_iou: f64,
    /// Points sampled per Fourier contour.
    #[arg(long, default_value_t = 64)]
    samples: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CELLBENCH_LOG", "warn")).init();
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = pool.install(|| match cli.command {
        Command::Evaluate(a) => evaluate::run(&a),
        Command::Rank(a) => rank::run_rank(&a),
        Command::Stability(a) => rank::run_stability(&a),
        Command::Decode(a) => decode::run(&a),
    });
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{failures} file(s) failed; see the report above");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
