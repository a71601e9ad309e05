use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "focusdd",
    version,
    about = "Attention-guided dataset distillation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline and write composites, provenance and config.
    Distill(DistillArgs),
    /// Write a JSON-lines scoring report, one record per image.
    Score(ScoreArgs),
    /// Write region soft labels for an existing distilled directory.
    Relabel(RelabelArgs),
    /// Write per-epoch fine-tuning sample manifests.
    DftSample(DftArgs),
    /// Dataset analytics.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Run the built-in oracle equivalence suites.
    Verify(VerifyArgs),
    /// Write seeded synthetic weights in NTF format.
    GenWeights(GenWeightsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyOrderArg {
    Sequential,
    Shuffled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AreaModeArg {
    Sum,
    Mean,
}

/// Where images come from.
#[derive(Debug, Args, Clone, Default)]
pub struct DataArgs {
    /// Dataset root laid out as <root>/<class_name>/*.{png,ppm}
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// JSON-lines manifest of {path, class_id, image_id}
    #[arg(long, conflicts_with = "data")]
    pub manifest: Option<PathBuf>,
}

/// Which model produces predictions and attention.
#[derive(Debug, Args, Clone, Default)]
pub struct ModelArgs {
    /// NTF weights file
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Use brightness saliency instead of a transformer
    #[arg(long, conflicts_with = "weights")]
    pub saliency: bool,
    /// Saliency input size (square)
    #[arg(long, requires = "saliency")]
    pub saliency_input: Option<usize>,
    /// Saliency patch size
    #[arg(long, requires = "saliency")]
    pub saliency_patch: Option<usize>,
    /// Transformer block whose attention is used (default: last)
    #[arg(long)]
    pub attention_block: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Window side ratio in (0, 1]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Weight of the area score in the realism score
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, value_enum)]
    pub area_mode: Option<AreaModeArg>,
}

#[derive(Debug, Args)]
pub struct DistillArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub select: SelectArgs,
    /// Composites per class
    #[arg(long)]
    pub ipc: Option<usize>,
    /// Key-patch set size (default 3 * ipc)
    #[arg(long)]
    pub key_images: Option<usize>,
    /// Background set size (default ipc)
    #[arg(long)]
    pub background_images: Option<usize>,
    /// Composite side length in pixels
    #[arg(long)]
    pub out_size: Option<usize>,
    #[arg(long, value_enum)]
    pub key_order: Option<KeyOrderArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    pub workers: Option<usize>,
    /// JSON file with defaults for any of these flags
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Keys accepted by `distill --config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub saliency: Option<bool>,
    pub saliency_input: Option<usize>,
    pub saliency_patch: Option<usize>,
    pub attention_block: Option<usize>,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub area_mode: Option<AreaModeArg>,
    pub ipc: Option<usize>,
    pub key_images: Option<usize>,
    pub background_images: Option<usize>,
    pub out_size: Option<usize>,
    pub key_order: Option<KeyOrderArg>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub select: SelectArgs,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output file, or `-` for standard output
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegionModeArg {
    Cells,
    Random,
}

#[derive(Debug, Args)]
pub struct RelabelArgs {
    /// Distilled output directory (with provenance.jsonl)
    #[arg(long)]
    pub dir: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "cells")]
    pub regions: RegionModeArg,
    /// Random crops per composite
    #[arg(long, default_value_t = 4)]
    pub crops: usize,
    #[arg(long, default_value_t = 0.25)]
    pub scale_min: f64,
    #[arg(long, default_value_t = 0.75)]
    pub scale_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DftArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub ipc: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of epochs to write, starting at epoch 0
    #[arg(long, default_value_t = 1)]
    pub epochs: u64,
    /// Output directory (manifests land in <out>/dft/), or `-` for standard output
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Laplacian SNR distribution of a set of images
    Snr(SnrArgs),
    /// Effective sample size
    Ess(EssArgs),
}

#[derive(Debug, Args)]
pub struct SnrArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Individual image files
    #[arg(long, num_args = 1..)]
    pub images: Vec<PathBuf>,
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct EssArgs {
    #[arg(long)]
    pub dprime: f64,
    #[arg(long, default_value_t = 3.0)]
    pub m: f64,
    #[arg(long, default_value_t = 1.0)]
    pub n: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenWeightsArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[arg(long, default_value_t = 4)]
    pub heads: usize,
    #[arg(long, default_value_t = 64)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 4)]
    pub patch_size: usize,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    /// Input side length (square)
    #[arg(long, default_value_t = 32)]
    pub input_size: usize,
    #[arg(long, default_value_t = 3)]
    pub channels: usize,
    #[arg(long)]
    pub out: PathBuf,
}
