//! `musebench` command-line entry point.

mod commands;
mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::FileConfig;
use crate::error::{exit_code, EXIT_VALIDATION};

#[derive(Debug, Parser)]
#[command(
    name = "musebench",
    version,
    about = "Benchmark construction and alignment evaluation pipelines"
)]
pub struct Cli {
    /// TOML file with per-command settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select a category-balanced prompt subset.
    Sample(SampleArgs),
    /// Cluster prompt embeddings into semantic categories.
    Cluster(ClusterArgs),
    /// Generate synthetic prompts from keyword tables.
    Synth(SynthArgs),
    /// Split prompts into typed elements with an LLM.
    SplitElements(SplitArgs),
    /// Generate one yes/no question per element with an LLM.
    GenQuestions(QuestionArgs),
    /// Aggregate annotator labels into ground truth.
    Aggregate(AggregateArgs),
    /// Per-prompt score spread and loss weight.
    Sigma(SigmaArgs),
    /// Dataset statistics and histograms.
    Stats(StatsArgs),
    /// Element and image scores from VQA logits.
    ScoreVqa(ScoreVqaArgs),
    /// Agreement between predictions and human labels.
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Leaderboard of per-model scores.
    Rank(RankArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Exact,
    Greedy,
    Oracle,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Prompt JSONL whose category labels define the memberships.
    #[arg(long, required_unless_present = "problem", conflicts_with = "problem")]
    pub corpus: Option<PathBuf>,
    /// Shaping instance JSON.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// JSON list of dimensions; defaults to the built-in four.
    #[arg(long, conflicts_with = "infer_dimensions")]
    pub dimensions: Option<PathBuf>,
    /// Use the dimensions and categories present in the corpus.
    #[arg(long)]
    pub infer_dimensions: bool,
    /// Subset size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Branch-and-bound node budget.
    #[arg(long)]
    pub budget_nodes: Option<u64>,
    /// Exhaustive search instead of branch-and-bound.
    #[arg(long, conflicts_with = "greedy")]
    pub oracle: bool,
    /// Greedy swap search only.
    #[arg(long)]
    pub greedy: bool,
    /// PromptVariance JSONL; keeps the `--top-k` highest-spread prompts first.
    #[arg(long, requires = "corpus")]
    pub variances: Option<PathBuf>,
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Selection JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Selected prompts as JSONL.
    #[arg(long, requires = "corpus")]
    pub subset_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Embedding JSONL ({prompt_id, vector}).
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Normalize vectors and cluster by cosine distance.
    #[arg(long)]
    pub cosine: bool,
    /// Model JSON ({k, centroids, assignments, inertia}).
    #[arg(long)]
    pub out: PathBuf,
    /// Prompt JSONL to label with the semantic clusters.
    #[arg(long, requires = "labeled_out")]
    pub prompts: Option<PathBuf>,
    #[arg(long, requires = "prompts")]
    pub labeled_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Keyword corpus JSON; the bundled tables when absent.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub per_category: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Prompt JSONL.
    #[arg(long)]
    pub out: PathBuf,
    /// Write LLM requests for the model-mediated categories instead of
    /// calling the endpoint.
    #[arg(long, requires = "requests")]
    pub requests_only: bool,
    #[arg(long)]
    pub requests: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Prompt JSONL.
    #[arg(long)]
    pub prompts: PathBuf,
    /// ElementList JSONL, or request JSONL with `--requests-only`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub requests_only: bool,
}

#[derive(Debug, Args)]
pub struct QuestionArgs {
    /// Prompt JSONL.
    #[arg(long)]
    pub prompts: PathBuf,
    /// ElementList JSONL.
    #[arg(long)]
    pub elements: PathBuf,
    /// Question JSONL, or request JSONL with `--requests-only`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub requests_only: bool,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// AnnotationRecord JSONL.
    #[arg(long)]
    pub annotations: PathBuf,
    /// AggregatedPair JSONL.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Measure {
    Sd,
    Variance,
}

#[derive(Debug, Args)]
pub struct SigmaArgs {
    /// AggregatedPair JSONL.
    #[arg(long)]
    pub aggregated: PathBuf,
    /// ImagePair JSONL mapping pairs to prompts.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, value_enum)]
    pub measure: Option<Measure>,
    /// PromptVariance JSONL with a `loss_weight` column.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// AggregatedPair JSONL.
    #[arg(long)]
    pub aggregated: PathBuf,
    /// Histogram bins over [1, 5].
    #[arg(long)]
    pub bins: Option<usize>,
    /// StatsReport JSON; histogram CSVs are written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VqaMethod {
    Pn,
    Tifa,
}

#[derive(Debug, Args)]
pub struct ScoreVqaArgs {
    /// VqaLogits JSONL.
    #[arg(long)]
    pub logits: PathBuf,
    #[arg(long, value_enum)]
    pub method: Option<VqaMethod>,
    /// Use PN records asked without the generation prompt.
    #[arg(long)]
    pub no_prompt_context: bool,
    /// PredictionRecord JSONL whose overall scores are blended in.
    #[arg(long)]
    pub overall: Option<PathBuf>,
    /// Weight of the overall score in the blend.
    #[arg(long)]
    pub weight: Option<f64>,
    /// Source tag for prediction records.
    #[arg(long)]
    pub source: Option<String>,
    /// ElementScoreSet JSONL.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-pair CSV (pair_id, es_avg, score).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// PredictionRecord JSONL.
    #[arg(long)]
    pub pred_out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum MetricsCommand {
    /// SRCC, PLCC and KRCC of overall scores.
    Corr(CorrArgs),
    /// Element-level accuracy at the best threshold.
    Fine(FineArgs),
    /// Structural-problem detection accuracy and recall.
    Structural(StructuralArgs),
}

#[derive(Debug, Args)]
pub struct CorrArgs {
    /// PredictionRecord JSONL.
    #[arg(long)]
    pub pred: PathBuf,
    /// AggregatedPair JSONL.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FineArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeanKind {
    Harmonic,
    Arithmetic,
}

#[derive(Debug, Args)]
pub struct StructuralArgs {
    /// JSONL of {pair_id, label, problem, p_yes}.
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, value_enum)]
    pub mean: Option<MeanKind>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[value(alias = "markdown")]
    Md,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// ScoreRecord JSONL.
    #[arg(long, required_unless_present = "pred", conflicts_with = "pred")]
    pub scores: Option<PathBuf>,
    /// PredictionRecord JSONL, joined to models through `--pairs`.
    #[arg(long, requires = "pairs")]
    pub pred: Option<PathBuf>,
    /// ImagePair JSONL.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// AggregatedPair JSONL; discarded pairs are left out.
    #[arg(long, requires = "pred")]
    pub truth: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = FileConfig::load(cli.config.as_deref())
        .and_then(|config| commands::dispatch(&cli.command, &config));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
