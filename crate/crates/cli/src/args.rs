use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use detext_core::corpus::SplitRatios;
use detext_core::svm::Gamma;
use detext_core::Source;

#[derive(Parser, Debug)]
#[command(
    name = "detext",
    version,
    about = "Build length-bucketed human/machine sentence corpora, train a TF-IDF + RBF-SVM detector, and evaluate detectors per sentence length",
    args_override_self = true
)]
pub struct Cli {
    /// Flat `key = value` file; each key is a flag name and is applied before the command-line flags (default: none)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker thread cap for every parallel stage (default: number of cores)
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    /// Log level: off, error, warn, info, debug, trace
    #[arg(long, global = true, default_value = "info", value_name = "LEVEL")]
    pub log_level: log::LevelFilter,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Ingest raw sentence files, filter by length, normalize bucket sizes and split
    BuildCorpus(BuildCorpusArgs),
    /// Pair every human sentence with a machine rephrase and re-split
    Rephrase(RephraseArgs),
    /// Fit the vocabulary and SVM on a training split
    Train(TrainArgs),
    /// Score a split with a model or an external score file and report per length range
    Evaluate(EvaluateArgs),
    /// Print the decision value of each line read from standard input
    Score(ScoreArgs),
}

#[derive(Args, Debug)]
pub struct BuildCorpusArgs {
    /// Raw input, one sentence per line, as SOURCE=PATH; repeatable
    #[arg(long = "input", value_name = "SOURCE=PATH", required = true, value_parser = parse_input)]
    pub inputs: Vec<(Source, PathBuf)>,

    /// Split lines of SOURCE into N-word chunks before filtering, as SOURCE=N (default: no chunking)
    #[arg(long = "chunk", value_name = "SOURCE=N", value_parser = parse_chunk)]
    pub chunks: Vec<(Source, usize)>,

    /// Length ranges, one `lo-hi` per line (default: the built-in 19 ranges)
    #[arg(long, value_name = "PATH")]
    pub bucket_spec: Option<PathBuf>,

    /// Cap on records kept per length range (default: no cap)
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub target_per_bucket: Option<u64>,

    /// Train,test,val fractions
    #[arg(long, default_value = "0.8,0.1,0.1", value_name = "A,B,C")]
    pub ratios: SplitRatios,

    /// Seed for normalization and splitting
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendChoice {
    Http,
    Mock,
}

#[derive(Args, Debug)]
pub struct RephraseArgs {
    /// Output directory of build-corpus
    #[arg(long, value_name = "DIR")]
    pub in_dir: PathBuf,

    /// Output directory for the paired corpus and its splits
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,

    /// Rephrase backend
    #[arg(long, value_enum, default_value_t = BackendChoice::Http)]
    pub backend: BackendChoice,

    /// Chat-completions base URL; the API key is read from DETEXT_API_KEY
    #[arg(long, default_value = "https://api.openai.com/v1", value_name = "URL")]
    pub backend_url: String,

    /// Model name sent to the endpoint
    #[arg(long, default_value = detext_core::rephrase::DEFAULT_MODEL, value_name = "NAME")]
    pub llm_model: String,

    /// Sampling temperature sent to the endpoint (default: the endpoint's own)
    #[arg(long)]
    pub temperature: Option<f64>,

    /// Maximum requests in flight, further capped by --threads
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u16).range(1..))]
    pub workers: u16,

    /// Minimum milliseconds between request starts (http backend only)
    #[arg(long, default_value_t = 100, value_name = "MS")]
    pub min_interval_ms: u64,

    /// Attempts per sentence before giving up on transient failures
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_attempts: u32,

    /// Delay before the first retry; doubles on each further retry
    #[arg(long, default_value_t = 500, value_name = "MS")]
    pub base_delay_ms: u64,

    /// Per-request timeout
    #[arg(long, default_value_t = 60, value_name = "SECS")]
    pub timeout_secs: u64,

    /// Prompt template file containing `{sentence}` once (default: the built-in prompt)
    #[arg(long, value_name = "PATH")]
    pub prompt_template: Option<PathBuf>,

    /// Checkpoint file (default: OUT_DIR/checkpoint.jsonl)
    #[arg(long, value_name = "PATH")]
    pub checkpoint: Option<PathBuf>,

    /// Seed for the mock backend
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Substitution words for the mock backend, whitespace separated (default: built-in list)
    #[arg(long, value_name = "PATH")]
    pub mock_wordlist: Option<PathBuf>,

    /// Fraction of words the mock backend substitutes
    #[arg(long, default_value_t = detext_core::rephrase::DEFAULT_REPLACE_FRACTION, value_name = "F")]
    pub mock_replace_fraction: f64,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Training split (JSON lines)
    #[arg(long, value_name = "PATH")]
    pub train: PathBuf,

    /// Length ranges (default: bucket_spec.txt beside the data, else the built-in ranges)
    #[arg(long, value_name = "PATH")]
    pub bucket_spec: Option<PathBuf>,

    /// Output model directory
    #[arg(long, value_name = "DIR")]
    pub model: PathBuf,

    /// Soft-margin penalty
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,

    /// RBF width: `scale` or a positive number
    #[arg(long, default_value = "scale")]
    pub gamma: Gamma,

    /// KKT tolerance
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,

    /// Iteration budget in multiples of the training-set size
    #[arg(long, default_value_t = 1000)]
    pub max_passes: usize,

    /// Kernel row cache budget in MiB
    #[arg(long, default_value_t = 256, value_name = "MIB")]
    pub cache_mb: usize,

    /// Minimum document frequency for a term to enter the vocabulary
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_df: u64,

    /// Vocabulary size cap; 0 disables the cap
    #[arg(long, default_value_t = 50_000)]
    pub max_features: usize,

    /// Use 1 + ln(tf) instead of raw term counts (default: off)
    #[arg(long)]
    pub sublinear_tf: bool,

    /// Skip L2 normalization of document vectors (default: off)
    #[arg(long)]
    pub no_l2_normalize: bool,

    /// Keep case when tokenizing (default: off)
    #[arg(long)]
    pub no_lowercase: bool,

    /// Train on a seeded subsample of at most N records, whole pairs only (default: all records)
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(2..))]
    pub max_train: Option<u64>,

    /// Seed for subsampling and the solver's fallback sweep
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatChoice {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Split to evaluate (JSON lines)
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,

    /// Length ranges (default: bucket_spec.txt beside the data, else the built-in ranges)
    #[arg(long, value_name = "PATH")]
    pub bucket_spec: Option<PathBuf>,

    /// Model directory written by `train` (required unless --scores is given)
    #[arg(long, value_name = "DIR", required_unless_present = "scores", conflicts_with = "scores")]
    pub model: Option<PathBuf>,

    /// External score file with header record_id,score[,threshold] (required unless --model is given)
    #[arg(long, value_name = "PATH")]
    pub scores: Option<PathBuf>,

    /// F1 decision threshold (default: 0, or the score file's declared threshold)
    #[arg(long)]
    pub threshold: Option<f64>,

    /// Fail when the score file does not cover every record (default: off)
    #[arg(long)]
    pub strict: bool,

    /// Report format
    #[arg(long, value_enum, default_value_t = FormatChoice::Csv)]
    pub format: FormatChoice,

    /// Report file (default: standard output)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// Model directory written by `train`
    #[arg(long, value_name = "DIR")]
    pub model: PathBuf,
}

fn parse_input(s: &str) -> Result<(Source, PathBuf), String> {
    let (source, path) = s.split_once('=').ok_or("expected SOURCE=PATH")?;
    let source: Source = source.parse().map_err(|e: detext_core::Error| e.to_string())?;
    if path.is_empty() {
        return Err("empty path".into());
    }
    Ok((source, PathBuf::from(path)))
}

fn parse_chunk(s: &str) -> Result<(Source, usize), String> {
    let (source, n) = s.split_once('=').ok_or("expected SOURCE=N")?;
    let source: Source = source.parse().map_err(|e: detext_core::Error| e.to_string())?;
    let n: usize = n.parse().map_err(|_| format!("invalid chunk length {n:?}"))?;
    Ok((source, n))
}
