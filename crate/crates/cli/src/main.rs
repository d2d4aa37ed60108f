//! Batch command-line pipeline: generate synthetic datasets, train symbol
//! embeddings, and export similarity maps, feature classifications, and
//! volume association analyses. Every command records a manifest that can be
//! re-executed bit-identically in deterministic mode.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use voxel2vec_core::Error;

#[derive(Parser)]
#[command(
    name = "voxel2vec",
    version,
    about = "Distributed representations of scalar values in volumetric data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic ABC-flow dataset (single step, time series, or
    /// parameter sweep) as raw volumes plus a dataset descriptor.
    Gen(GenArgs),
    /// Train an embedding over one volume and write the embedding file.
    Train(TrainArgs),
    /// Export the scalar-value similarity map of a trained embedding.
    Simmap(SimmapArgs),
    /// Cluster symbol embeddings into voxel features and export them.
    Classify(ClassifyArgs),
    /// Association analysis across a time-varying or ensemble collection.
    Associate(AssociateArgs),
    /// Re-execute a recorded manifest into a fresh output directory.
    Rerun(RerunArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Generate the ABC flow family (the only built-in generator).
    #[arg(long)]
    abc: bool,
    /// Grid size: one value for a cube or `nx,ny,nz`.
    #[arg(long, default_value = "64")]
    dims: String,
    /// Time value or inclusive range `start:end:stride`.
    #[arg(long, default_value = "0")]
    t: String,
    /// Parameter sweep, e.g. `A=-2:2:0.5,B=-2:2:0.5`.
    #[arg(long)]
    sweep: Option<String>,
    /// Flow coefficient A (ignored for swept parameters).
    #[arg(long, default_value_t = 3f64.sqrt())]
    a: f64,
    /// Flow coefficient B (ignored for swept parameters).
    #[arg(long, default_value_t = 2f64.sqrt())]
    b: f64,
    /// Flow coefficient C.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Asymmetric time modulation: the time-scaled sine term appears only
    /// in the first velocity component (default).
    #[arg(long, conflicts_with = "abc_symmetric")]
    abc_faithful: bool,
    /// Apply the time-scaled modulation to both components instead.
    #[arg(long)]
    abc_symmetric: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

/// Training hyper-parameters shared by `train` and `associate`.
/// Precedence: explicit flags > `--config` file > defaults.
#[derive(Args, Clone)]
struct TrainOpts {
    /// JSON config file with training parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Quantization level count.
    #[arg(long = "R")]
    quantization: Option<u16>,
    /// Context window radius.
    #[arg(long = "n")]
    context_window: Option<usize>,
    /// Negative samples per positive.
    #[arg(long = "k")]
    negatives: Option<usize>,
    /// Embedding dimension.
    #[arg(long = "d")]
    dimension: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Norm penalty coefficient.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long)]
    batch_size: Option<u64>,
    /// Subsampling threshold in (0, 1].
    #[arg(long)]
    rho: Option<f64>,
    /// Guaranteed center appearances per symbol per epoch.
    #[arg(long)]
    min_samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Disable exclusion of the center and its context from negatives.
    #[arg(long)]
    no_exclusion: bool,
    /// Disable the self-paced negative curriculum.
    #[arg(long)]
    no_self_paced: bool,
    /// Worker threads; >1 trades bit-reproducibility for throughput.
    /// Falls back to the V2V_THREADS environment variable.
    #[arg(long)]
    threads: Option<usize>,
    /// Require the bit-reproducible single-writer mode (rejects --threads > 1).
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset descriptor JSON.
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated variable names.
    #[arg(long)]
    vars: String,
    /// Member label when the descriptor holds a collection.
    #[arg(long)]
    member: Option<String>,
    #[command(flatten)]
    train: TrainOpts,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimmapArgs {
    /// Embedding file written by `train`.
    #[arg(long)]
    embedding: PathBuf,
    /// Heatmap color range `lo:hi`.
    #[arg(long, default_value = "0:1")]
    value_range: String,
    /// Pixels per matrix cell.
    #[arg(long, default_value_t = 1)]
    scale: u32,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    embedding: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    vars: String,
    /// Quantization level count; must match the embedding's training run.
    #[arg(long = "R", default_value_t = 64)]
    quantization: u16,
    /// Member label when the descriptor holds a collection.
    #[arg(long)]
    member: Option<String>,
    /// Clustering radius.
    #[arg(long, default_value_t = 0.85)]
    eps: f64,
    #[arg(long, default_value_t = 4)]
    minpts: usize,
    /// Clustering metric over embedding vectors.
    #[arg(long, default_value = "cosine")]
    metric: String,
    /// Cluster the raw level combinations instead of embeddings (baseline).
    #[arg(long)]
    raw_combinations: bool,
    /// Features below this voxel count are grayed out (default: 0.1% of T).
    #[arg(long)]
    min_voxels: Option<u64>,
    #[arg(long, default_value_t = 5.0)]
    perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    tsne_iterations: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Scatter image size in pixels.
    #[arg(long, default_value_t = 800)]
    canvas: u32,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct AssociateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    vars: String,
    #[command(flatten)]
    train: TrainOpts,
    /// Heatmap color range `lo:hi`.
    #[arg(long, default_value = "0.7:1")]
    value_range: String,
    /// Pixels per heatmap cell.
    #[arg(long, default_value_t = 8)]
    scale: u32,
    /// Prediction scoring orientation.
    #[arg(long, default_value = "context-centers-vs-candidates")]
    predict_scoring: String,
    /// Also write each predicted volume as a raw u32 symbol grid.
    #[arg(long)]
    export_predictions: bool,
    #[arg(long, default_value_t = 5.0)]
    perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    tsne_iterations: usize,
    /// Scatter image size in pixels.
    #[arg(long, default_value_t = 800)]
    canvas: u32,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RerunArgs {
    /// Manifest written by a previous run.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parameter(_) => 2,
        Error::Descriptor(_) | Error::Data(_) | Error::Io { .. } => 3,
        Error::Internal(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => commands::gen::run_from_args(args),
        Command::Train(args) => commands::train::run_from_args(args),
        Command::Simmap(args) => commands::simmap::run_from_args(args),
        Command::Classify(args) => commands::classify::run_from_args(args),
        Command::Associate(args) => commands::associate::run_from_args(args),
        Command::Rerun(args) => commands::rerun(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(exit_code_for(&err))
        }
    }
}
