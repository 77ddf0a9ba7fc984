use std::path::PathBuf;

use bayesteach::formats::OutputFormat;
use bayesteach_core::ProposalKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "bayesteach", version, about = "Bayesian teaching for LDA topic models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit topics to a corpus with collapsed Gibbs sampling.
    Fit(FitArgs),
    /// Exact vs uniform vs sequential importance sampling on random document sets.
    EstimatorCompare(CompareArgs),
    /// Samples needed to reach a relative-error target, by document length.
    ScalingBench(ScalingArgs),
    /// Exact teaching and likelihood distributions over a small document space.
    SimplexDensity(SimplexArgs),
    /// Learner error on teaching versus random documents.
    LearnerError(LearnerArgs),
    /// Generate teaching documents with pseudo-marginal MCMC.
    Teach(TeachArgs),
    /// Rank corpus documents by teaching score.
    Rank(RankArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::EstimatorCompare(_) => "estimator-compare",
            Command::ScalingBench(_) => "scaling-bench",
            Command::SimplexDensity(_) => "simplex-density",
            Command::LearnerError(_) => "learner-error",
            Command::Teach(_) => "teach",
            Command::Rank(_) => "rank",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Result file; the manifest goes next to it.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Thread cap; defaults to the number of cores.
    #[arg(long)]
    #[serde(skip)]
    pub workers: Option<usize>,
    /// No progress on stderr.
    #[arg(short, long)]
    #[serde(skip)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Proposal {
    Uniform,
    Sis,
}

impl From<Proposal> for ProposalKind {
    fn from(p: Proposal) -> Self {
        match p {
            Proposal::Uniform => ProposalKind::Uniform,
            Proposal::Sis => ProposalKind::Sequential,
        }
    }
}

/// How teaching scores are computed.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    /// Importance samples per estimate.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = Proposal::Sis)]
    pub proposal: Proposal,
    /// Sample until this relative error is reached instead of a fixed count.
    #[arg(long)]
    pub relative_error: Option<f64>,
    /// Upper bound on samples when a relative-error target is set.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_samples: usize,
    /// Enumerate instead of sampling (small problems only).
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorpusArgs {
    /// Raw `.jsonl` corpus or preprocessed `.json` corpus.
    #[arg(long)]
    pub corpus: PathBuf,
    /// One stopword per line (raw corpora only).
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
    #[arg(long)]
    pub keep_case: bool,
    #[arg(long)]
    pub keep_punct: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub topics: usize,
    /// Defaults to 50 / topics.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    /// Topic labels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<String>,
    /// Also write the preprocessed corpus here.
    #[arg(long)]
    pub save_corpus: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 512)]
    pub pairs: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 3)]
    pub topics: usize,
    #[arg(long, default_value_t = 5)]
    pub vocab: usize,
    #[arg(long, default_value_t = 2)]
    pub docs: usize,
    #[arg(long, default_value_t = 5)]
    pub doc_len: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 40, 60])]
    pub lengths: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub topics: usize,
    #[arg(long, default_value_t = 100)]
    pub vocab: usize,
    /// Paired with `--beta` element by element.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0])]
    pub alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0])]
    pub beta: Vec<f64>,
    #[arg(long, default_value_t = 128)]
    pub runs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub relative_error: f64,
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_samples: usize,
    /// Also write one row per run here.
    #[arg(long)]
    pub runs_output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    CountVectors,
    Sequences,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SimplexArgs {
    #[command(flatten)]
    pub common: Common,
    /// Topic model JSON.
    #[arg(long)]
    pub topics_file: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub docs: usize,
    #[arg(long, default_value_t = 10)]
    pub doc_len: usize,
    /// Defaults to the value stored in the model file.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Teach only these topics (labels or indices).
    #[arg(long, value_delimiter = ',')]
    pub topic: Vec<String>,
    #[arg(long, value_enum, default_value_t = Weighting::CountVectors)]
    pub weighting: Weighting,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct LearnerArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub score: ScoreArgs,
    /// True topics; drawn from the prior when absent.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub topics: usize,
    #[arg(long, default_value_t = 10)]
    pub vocab: usize,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3, 4])]
    pub doc_counts: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub doc_len: usize,
    #[arg(long, default_value_t = 64)]
    pub replications: usize,
    #[arg(long, default_value_t = 1000)]
    pub gibbs_iterations: usize,
    #[arg(long, default_value_t = 500)]
    pub pmmh_steps: usize,
    /// Word flips per proposal; defaults to 5% of the tokens.
    #[arg(long)]
    pub flips: Option<usize>,
    /// Write the true model used here.
    #[arg(long)]
    pub save_model: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct TeachArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub score: ScoreArgs,
    /// Topic model JSON, as written by `fit`.
    #[arg(long)]
    pub model_file: PathBuf,
    /// Preprocessed corpus whose documents start the chain.
    #[arg(long)]
    pub initial: Option<PathBuf>,
    /// Otherwise start from this many documents drawn from the model.
    #[arg(long, default_value_t = 1)]
    pub docs: usize,
    #[arg(long, default_value_t = 20)]
    pub doc_len: usize,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Teach only these topics (labels or indices).
    #[arg(long, value_delimiter = ',')]
    pub topic: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    /// Word flips per proposal; defaults to 5% of the tokens.
    #[arg(long)]
    pub flips: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct RankArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Topic model JSON, as written by `fit`.
    #[arg(long)]
    pub model_file: PathBuf,
    /// Defaults to the value stored in the model file.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Teach only these topics (labels or indices).
    #[arg(long, value_delimiter = ',')]
    pub topic: Vec<String>,
    #[arg(long, default_value_t = 16)]
    pub reps: usize,
    /// Score only documents at or below this quantile of cosine distance.
    #[arg(long)]
    pub prefilter: Option<f64>,
}
