use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tora_core::io::ReportFormat;
use tora_core::sim::AttentionCombine;
use tora_core::transform::DEFAULT_SIGMA;

#[derive(Debug, Parser)]
#[command(
    name = "tora",
    version,
    about = "Token spacing and residual alignment for text-embedding matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transform a (V, d) or (B, V, d) embedding array.
    Transform(TransformArgs),
    /// Report geometry metrics for an embedding array.
    Analyze(AnalyzeArgs),
    /// Run the joint-attention simulator with and without the intervention.
    Simulate(SimulateArgs),
    /// Run the simulator's intervened metric pass over a grid of sigma values.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CombineArg {
    Concat,
    Sum,
}

impl From<CombineArg> for AttentionCombine {
    fn from(c: CombineArg) -> Self {
        match c {
            CombineArg::Concat => AttentionCombine::Concat,
            CombineArg::Sum => AttentionCombine::Sum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterventionArg {
    /// Token spacing plus residual alignment.
    Tora,
    /// Variance scale-up only.
    ScaleUp,
}

impl InterventionArg {
    pub fn label(self) -> &'static str {
        match self {
            InterventionArg::Tora => "tora",
            InterventionArg::ScaleUp => "scale-up",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SemanticArgs {
    /// Conditional (V, d) embeddings for the semantic direction.
    #[arg(long, requires = "null")]
    pub cond: Option<PathBuf>,
    /// Null-prompt (V, d) embeddings for the semantic direction.
    #[arg(long, requires = "cond")]
    pub null: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AlignArgs {
    /// Skip residual alignment.
    #[arg(long)]
    pub no_align: bool,
    /// Fix the principal dimension instead of detecting the elbow.
    #[arg(long, value_name = "INT")]
    pub elbow_k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub output: PathBuf,
    /// Manifest path [default: <output>.manifest.json]
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SIGMA, value_name = "F")]
    pub sigma: f64,
    #[command(flatten)]
    pub semantic: SemanticArgs,
    #[command(flatten)]
    pub align: AlignArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Transformed counterpart of --input; adds after-metrics and, with a
    /// semantic pair, cosine-alignment change records.
    #[arg(long, value_name = "PATH")]
    pub after: Option<PathBuf>,
    #[command(flatten)]
    pub semantic: SemanticArgs,
    /// GMM component count [default: max(2, V/8)]
    #[arg(long, value_name = "INT")]
    pub clusters: Option<usize>,
    #[arg(long, default_value_t = 0, value_name = "INT")]
    pub seed: u64,
    /// Report path; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Initial text embeddings (V, d); synthetic clusters when omitted.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 6, value_name = "INT")]
    pub blocks: usize,
    #[arg(long, default_value_t = 4, value_name = "INT")]
    pub timesteps: usize,
    /// Text tokens V [default: 8, or taken from --input]
    #[arg(long, value_name = "INT")]
    pub tokens: Option<usize>,
    #[arg(long, default_value_t = 16, value_name = "INT")]
    pub latents: usize,
    /// Hidden dimension d [default: 64, or taken from --input]
    #[arg(long, value_name = "INT")]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 0, value_name = "INT")]
    pub seed: u64,
    /// GMM component count [default: max(2, V/8)]
    #[arg(long, value_name = "INT")]
    pub clusters: Option<usize>,
    #[arg(long, value_enum, default_value_t = CombineArg::Concat)]
    pub attn_combine: CombineArg,
    #[arg(long, value_enum, default_value_t = InterventionArg::Tora)]
    pub intervention: InterventionArg,
    #[command(flatten)]
    pub semantic: SemanticArgs,
    #[command(flatten)]
    pub align: AlignArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = DEFAULT_SIGMA, value_name = "F")]
    pub sigma: f64,
    /// Directory for reports and averaged attention maps.
    #[arg(long, value_name = "DIR")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Inclusive sigma grid A:B:STEP, or a single value.
    #[arg(long, default_value = "1.0:1.5:0.1", value_name = "A:B:STEP")]
    pub grid: String,
    /// Maximum concurrent sweep points [default: available cores]
    #[arg(long, value_name = "INT")]
    pub jobs: Option<usize>,
    /// CSV path; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}
