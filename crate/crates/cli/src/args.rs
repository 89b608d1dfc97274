// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Global flags that take a value; used when locating subcommands in argv.
pub const VALUE_GLOBALS: [&str; 4] = ["--seed", "--config", "--out", "--threads"];

#[derive(Debug, Parser)]
#[command(name = "recpass", version, about = "Security analytics for recognition passwords")]
pub struct Cli {
    /// Master seed; every random choice derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// TOML file with default flag values; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Artifact path (standard output when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a synthetic gesture dataset.
    GenSynth(GenSynthArgs),
    /// Encode every trace of a dataset as a SAX word.
    Encode(EncodeArgs),
    /// Score one attempt against one template.
    Score(ScoreArgs),
    /// AUROC over a grid of (omega, beta).
    SweepParams(SweepArgs),
    /// Train an n-gram model on SAX words.
    Train(TrainArgs),
    /// Guessing curve of a model against targets, or cross-validated on a dataset.
    Attack(AttackArgs),
    /// Partial guessing metric of a model.
    Pgm(PgmArgs),
    /// Upper and lower bounds over account subsamples.
    Bounds(BoundsArgs),
    /// Unlock-pattern baseline.
    #[command(subcommand)]
    Pattern(PatternCommand),
    /// Start/end position and n-gram bias reports.
    #[command(subcommand)]
    Bias(BiasCommand),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenSynth(_) => "gen-synth",
            Command::Encode(_) => "encode",
            Command::Score(_) => "score",
            Command::SweepParams(_) => "sweep-params",
            Command::Train(_) => "train",
            Command::Attack(_) => "attack",
            Command::Pgm(_) => "pgm",
            Command::Bounds(_) => "bounds",
            Command::Pattern(PatternCommand::Pgm(_)) => "pattern pgm",
            Command::Pattern(PatternCommand::Enumerate(_)) => "pattern enumerate",
            Command::Pattern(PatternCommand::Synth(_)) => "pattern synth",
            Command::Bias(BiasCommand::Heatmap(_)) => "bias heatmap",
            Command::Bias(BiasCommand::Ngrams(_)) => "bias ngrams",
        }
    }

    /// The resolved arguments of the leaf subcommand, as JSON.
    pub fn config_json(&self) -> String {
        let v = match self {
            Command::GenSynth(a) => serde_json::to_string(a),
            Command::Encode(a) => serde_json::to_string(a),
            Command::Score(a) => serde_json::to_string(a),
            Command::SweepParams(a) => serde_json::to_string(a),
            Command::Train(a) => serde_json::to_string(a),
            Command::Attack(a) => serde_json::to_string(a),
            Command::Pgm(a) => serde_json::to_string(a),
            Command::Bounds(a) => serde_json::to_string(a),
            Command::Pattern(PatternCommand::Pgm(a)) => serde_json::to_string(a),
            Command::Pattern(PatternCommand::Enumerate(a)) => serde_json::to_string(a),
            Command::Pattern(PatternCommand::Synth(a)) => serde_json::to_string(a),
            Command::Bias(BiasCommand::Heatmap(a)) => serde_json::to_string(a),
            Command::Bias(BiasCommand::Ngrams(a)) => serde_json::to_string(a),
        };
        v.expect("arguments serialize")
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SaxArgs {
    /// Word length.
    #[arg(long, default_value_t = 8)]
    pub omega: usize,
    /// Alphabet size per axis.
    #[arg(long, default_value_t = 6)]
    pub beta: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct GenSynthArgs {
    #[arg(long, default_value_t = 100)]
    pub accounts: usize,
    #[arg(long, default_value_t = 5)]
    pub samples: usize,
    /// Per-sample jitter as a fraction of shape scale.
    #[arg(long, default_value_t = 0.05)]
    pub jitter: f64,
    /// delimited-text or record-stream; defaults from the output extension.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct EncodeArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub sax: SaxArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    /// sax, dtw or protractor.
    #[arg(long, default_value = "sax")]
    pub recognizer: String,
    /// Trace file holding exactly one trace.
    #[arg(long)]
    pub template: PathBuf,
    #[arg(long)]
    pub attempt: PathBuf,
    #[command(flatten)]
    pub sax: SaxArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Inclusive range `lo..hi`, a list `a,b,c` or a single value.
    #[arg(long, default_value = "4..12")]
    pub omega: String,
    #[arg(long, default_value = "3..10")]
    pub beta: String,
    #[arg(long, default_value = "sax")]
    pub recognizer: String,
    /// Impostor pairs per template; 0 keeps all.
    #[arg(long, default_value_t = 50)]
    pub impostor_cap: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Trace dataset or words CSV from `encode`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// n-gram order.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// none, additive, additive:<lambda> or good-turing.
    #[arg(long, default_value = "good-turing")]
    pub smoothing: String,
    #[command(flatten)]
    pub sax: SaxArgs,
    /// Train on every sample instead of each account's template.
    #[arg(long)]
    pub all_samples: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct AttackArgs {
    /// Model file from `train`.
    #[arg(long, requires = "targets", required_unless_present = "dataset")]
    pub model: Option<PathBuf>,
    /// Trace dataset or words CSV; one target per account (its template).
    #[arg(long, requires = "model")]
    pub targets: Option<PathBuf>,
    /// Cross-validate on this dataset instead of using a trained model.
    #[arg(long, conflicts_with_all = ["model", "targets"])]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value = "good-turing")]
    pub smoothing: String,
    #[command(flatten)]
    pub sax: SaxArgs,
    /// Guess budget, e.g. `1048576` or `2^20`.
    #[arg(long, default_value = "2^20")]
    pub max_guesses: String,
}

#[derive(Debug, Args, Serialize)]
pub struct PgmArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated success rates.
    #[arg(long, default_value = "0.1,0.2,0.5")]
    pub alpha: String,
    /// histogram or exact.
    #[arg(long, default_value = "histogram")]
    pub method: String,
    #[arg(long, default_value_t = 0.01)]
    pub bucket_width: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = "0.25,0.5,0.75,1.0")]
    pub fractions: String,
    #[arg(long, default_value = "0.2")]
    pub alpha: String,
    #[command(flatten)]
    pub sax: SaxArgs,
    #[arg(long, default_value_t = 0.01)]
    pub bucket_width: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternCommand {
    /// Partial guessing metric of a pattern corpus.
    Pgm(PatternPgmArgs),
    /// Write every valid 3x3 pattern.
    Enumerate(EmptyArgs),
    /// Generate a human-biased synthetic pattern corpus.
    Synth(PatternSynthArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PatternPgmArgs {
    /// One pattern per line as a digit string.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "0.2")]
    pub alpha: String,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value = "additive")]
    pub smoothing: String,
}

#[derive(Debug, Args, Serialize)]
pub struct EmptyArgs {}

#[derive(Debug, Args, Serialize)]
pub struct PatternSynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasCommand {
    /// Start and end point frequencies on a grid.
    Heatmap(HeatmapArgs),
    /// Coverage of the most frequent n-grams.
    Ngrams(NgramArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// `ROWSxCOLS`.
    #[arg(long, default_value = "10x10")]
    pub grid: String,
}

#[derive(Debug, Args, Serialize)]
pub struct NgramArgs {
    /// Trace dataset or words CSV.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub top: usize,
    #[command(flatten)]
    pub sax: SaxArgs,
    #[arg(long)]
    pub all_samples: bool,
}
