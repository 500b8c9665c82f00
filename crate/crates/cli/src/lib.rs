//! The `treenlg` command line: corpus validation, synthesis, scorer
//! training, decoding, evaluation and (de)lexicalization, all over JSONL
//! files.
//!
//! Exit status is 0 on success, 1 when the run completed but found
//! validation or decoding failures, and 2 on usage, configuration or I/O
//! errors.

mod commands;
pub mod config;
mod io;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{DecodedExample, DelexRecord, ValidationFailure, ValidationReport};

#[derive(Debug, Parser)]
#[command(name = "treenlg", version, about = "Tree-structured MR response generation pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML file with default settings; command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Worker threads for per-example work. Output order never depends on it.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Label inventory used to parse MRs and responses.
    #[arg(long, global = true, value_enum)]
    pub ontology: Option<OntologyName>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OntologyName {
    Weather,
    E2e,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Constrained,
    Unconstrained,
    Rerank,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every corpus line against the ontology and its MR.
    Validate(ValidateArgs),
    /// Generate a synthetic weather corpus (train.jsonl, test.jsonl).
    Synthesize(SynthesizeArgs),
    /// Train an n-gram scorer on a corpus and save it as JSON.
    TrainScorer(TrainArgs),
    /// Decode every MR of a corpus with a trained scorer.
    Decode(DecodeArgs),
    /// Score decoded predictions against a corpus and write an evaluation report.
    Evaluate(EvaluateArgs),
    /// Replace sparse argument values by placeholders.
    Delex(DelexArgs),
    /// Restore placeholder values in a delexicalized corpus.
    Relex(RelexArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Corpus JSONL (`-` for standard input).
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,
    /// Where to write the JSON report; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Number of examples across both splits.
    #[arg(long, value_name = "N")]
    pub n: Option<usize>,
    /// Seed of every random draw.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Share of examples placed in train.jsonl; the rest go to test.jsonl.
    #[arg(long, value_name = "RATIO")]
    pub train_ratio: Option<f64>,
    /// Directory receiving train.jsonl, test.jsonl, stats.json and the manifest.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training corpus JSONL (`-` for standard input).
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,
    /// Output model file.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// n-gram order.
    #[arg(long)]
    pub order: Option<usize>,
    /// Absolute discount in (0, 1).
    #[arg(long)]
    pub discount: Option<f64>,
    /// Examples an MR structure needs before it gets its own sub-model.
    #[arg(long, value_name = "N")]
    pub min_signature_examples: Option<usize>,
    /// Train on raw values instead of placeholders.
    #[arg(long)]
    pub no_delex: bool,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Corpus JSONL whose MRs are decoded (`-` for standard input).
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,
    /// Model file written by `train-scorer`.
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Output JSONL, one decoded example per input line (`-` for standard output).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Search mode.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Beam width.
    #[arg(long, value_name = "K")]
    pub beam: Option<usize>,
    /// Token limit per output, end marker included; defaults to a bound derived from the MR length.
    #[arg(long, value_name = "N")]
    pub max_length: Option<usize>,
    /// Length-normalization exponent; 0 ranks by raw log-probability.
    #[arg(long, value_name = "ALPHA")]
    pub length_penalty: Option<f64>,
    /// Decode raw MRs instead of placeholder MRs; must match training.
    #[arg(long)]
    pub no_delex: bool,
    /// Ignore the trained counts and score every vocabulary entry equally.
    #[arg(long)]
    pub uniform: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Output of `decode`.
    #[arg(long, value_name = "PATH")]
    pub predictions: PathBuf,
    /// The corpus that was decoded, supplying references.
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,
    /// Where to write the JSON report (`-` for standard output).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DelexArgs {
    /// Corpus JSONL (`-` for standard input).
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Output JSONL with a placeholder table per line (`-` for standard output).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RelexArgs {
    /// Output of `delex` (`-` for standard input).
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Restored corpus JSONL (`-` for standard output).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

/// How a command that ran to completion turned out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    /// Some lines failed validation or some MRs failed to decode.
    Failures,
}

impl Outcome {
    pub fn exit_code(self) -> ExitCode {
        match self {
            Outcome::Clean => ExitCode::SUCCESS,
            Outcome::Failures => ExitCode::from(1),
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(o) => o.exit_code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

pub fn execute(cli: &Cli) -> anyhow::Result<Outcome> {
    let file = config::FileConfig::load(cli.global.config.as_deref())?;
    let ctx = config::Context::resolve(&cli.global, &file)?;
    match &cli.command {
        Command::Validate(a) => commands::validate(&ctx, a),
        Command::Synthesize(a) => commands::synthesize(&ctx, &file, a),
        Command::TrainScorer(a) => commands::train(&ctx, &file, a),
        Command::Decode(a) => commands::decode(&ctx, &file, a),
        Command::Evaluate(a) => commands::evaluate(&ctx, a),
        Command::Delex(a) => commands::delex(&ctx, a),
        Command::Relex(a) => commands::relex(&ctx, a),
    }
}
