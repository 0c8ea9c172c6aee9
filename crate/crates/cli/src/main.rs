//! `memorability` command-line tool.
//!
//! Exit status is 0 on success, 1 when a file or the data in it is unusable,
//! and 2 when the command line itself is wrong (clap's usage errors).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use memorability::data::{Target, DEFAULT_FEATURE_DIM};
use memorability::nn::{Loss, OptimizerKind};

#[derive(Debug, Parser)]
#[command(
    name = "memorability",
    version,
    about = "Video memorability regression and motion statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a fresh model and write a checkpoint plus its per-epoch history.
    Train(TrainArgs),
    /// Continue training from a checkpoint, optionally freezing blocks.
    Finetune(FinetuneArgs),
    /// Score a labelled set and print `run,spearman,pearson,mse`.
    Evaluate(EvaluateArgs),
    /// Write `video_id,score` lines for every row of a feature file.
    Predict(PredictArgs),
    /// Mean optical-flow magnitude per video, plus a histogram.
    MotionStats(MotionArgs),
    /// Split a labelled set into train and validation files.
    Split(SplitArgs),
    /// Print a checkpoint's architecture and metadata.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TargetArg {
    Short,
    Long,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Target {
        match t {
            TargetArg::Short => Target::ShortTerm,
            TargetArg::Long => Target::LongTerm,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LossArg {
    L1,
    Mse,
}

impl From<LossArg> for Loss {
    fn from(l: LossArg) -> Loss {
        match l {
            LossArg::L1 => Loss::L1,
            LossArg::Mse => Loss::Mse,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Adam,
    Sgd,
}

impl From<OptimizerArg> for OptimizerKind {
    fn from(o: OptimizerArg) -> OptimizerKind {
        match o {
            OptimizerArg::Adam => OptimizerKind::Adam,
            OptimizerArg::Sgd => OptimizerKind::Sgd,
        }
    }
}

/// A comma-separated list of positive integers; empty means none.
#[derive(Debug, Clone)]
struct Widths(Vec<usize>);

fn parse_widths(s: &str) -> Result<Widths, String> {
    if s.trim().is_empty() {
        return Ok(Widths(Vec::new()));
    }
    memorability::nn::parse_dims(s)
        .map(Widths)
        .map_err(|e| e.to_string())
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not strictly between 0 and 1"))
    }
}

/// Training data plus the validation source: explicit files or a held-out
/// fraction of the training file.
#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, value_enum, default_value = "short")]
    target: TargetArg,
    #[arg(long, default_value_t = DEFAULT_FEATURE_DIM)]
    feature_dim: usize,
    #[arg(long, requires = "val_labels", conflicts_with = "val_fraction")]
    val_features: Option<PathBuf>,
    #[arg(long, requires = "val_features", conflicts_with = "val_fraction")]
    val_labels: Option<PathBuf>,
    #[arg(long, value_parser = parse_fraction, required_unless_present = "val_features")]
    val_fraction: Option<f64>,
}

#[derive(Debug, Args)]
struct OptimArgs {
    /// Seeds initialization, shuffling, dropout and the validation split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, value_enum, default_value = "l1")]
    loss: LossArg,
    #[arg(long, value_enum, default_value = "adam")]
    optimizer: OptimizerArg,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Checkpoint to write.
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch history table; defaults to `<out>.history.csv`.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    optim: OptimArgs,
    /// Comma-separated hidden widths.
    #[arg(long, value_parser = parse_widths, default_value = "512,512")]
    hidden: Widths,
    #[arg(long, default_value_t = 0.1)]
    dropout: f64,
}

#[derive(Debug, Args)]
struct FinetuneArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    optim: OptimArgs,
    /// Comma-separated 1-based block indices to keep fixed.
    #[arg(long, value_parser = parse_widths, default_value = "")]
    freeze: Widths,
    /// Defaults to the checkpoint's dropout rate.
    #[arg(long)]
    dropout: Option<f64>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, value_enum, default_value = "short")]
    target: TargetArg,
    /// Label for the `run` column.
    #[arg(long, default_value = "eval")]
    run: String,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MotionArgs {
    /// Directory holding one subdirectory of PGM frames per video.
    #[arg(long)]
    frames_root: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    #[arg(long, default_value_t = 0.1)]
    bin_width: f64,
    /// Writes `<out>.videos.csv` and `<out>.histogram.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = DEFAULT_FEATURE_DIM)]
    feature_dim: usize,
    #[arg(long, value_parser = parse_fraction)]
    val_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Writes `<out>.{train,val}.{features,labels}.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long)]
    checkpoint: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Finetune(a) => commands::finetune(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Predict(a) => commands::predict(a),
        Command::MotionStats(a) => commands::motion_stats(a),
        Command::Split(a) => commands::split(a),
        Command::Inspect(a) => commands::inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
