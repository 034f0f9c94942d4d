use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod error;
mod pipeline;

use error::{CliError, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "clinorm", version, about = "Fundus report standardization: terminology, augmentation, filtering, evaluation")]
struct Cli {
    /// Log verbosity on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Frequent n-grams of the original reports as phrase<TAB>frequency.
    ExtractTerms(ExtractArgs),
    /// Check a terminology file for duplicate ids, ambiguous surfaces and empty fields.
    ValidateTerms(ValidateArgs),
    /// Grow a corpus with seeded noise, semantic perturbation and synonym swaps.
    Augment(AugmentArgs),
    /// Standardize the original side of a corpus, one output line per pair.
    Standardize(StandardizeArgs),
    /// Drop conflicting, off-terminology and near-duplicate pairs.
    Filter(FilterArgs),
    /// Translate Chinese pairs to English with a terminology consistency check.
    Translate(TranslateArgs),
    /// Score hypothesis files against a test set.
    Evaluate(EvaluateArgs),
    /// Run extract-terms, augment, standardize, filter and evaluate per language.
    Pipeline(pipeline::PipelineArgs),
    /// Write a seeded synthetic bilingual corpus.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct TermsArg {
    /// Terminology TSV or JSON; the bundled reference store when omitted.
    #[arg(long)]
    terms: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    lang: Lang,
    #[arg(long, default_value_t = 3)]
    min_freq: usize,
    #[arg(long, default_value_t = 4)]
    max_len: usize,
    /// Drop phrases that are already surfaces of this terminology.
    #[arg(long)]
    terms: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    terms: PathBuf,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    terms: TermsArg,
    /// TOML or JSON with seed and technique rates.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    target_size: usize,
    /// Use only the first K pairs as augmentation sources.
    #[arg(long)]
    source_size: Option<usize>,
    #[arg(long)]
    confusion_zh: Option<PathBuf>,
    #[arg(long)]
    confusion_en: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct LlmArgs {
    /// Client settings file (TOML or JSON); overrides LLM_* environment variables.
    #[arg(long)]
    llm_config: Option<PathBuf>,
    #[arg(long)]
    api_base: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    max_retries: Option<u32>,
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Engine {
    Rule,
    Llm,
}

#[derive(Args, Debug)]
struct StandardizeArgs {
    #[arg(long, value_enum, default_value = "rule")]
    engine: Engine,
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    terms: TermsArg,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Corpus whose first pairs in each language serve as few-shot exemplars.
    #[arg(long)]
    exemplars: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    shots: usize,
    /// Prompt template file: system text, a `---` line, user text.
    #[arg(long)]
    prompt_template: Option<PathBuf>,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args, Debug)]
struct FilterArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    terms: TermsArg,
    #[arg(long, default_value_t = clinorm_core::filter::DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct TranslateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    terms: TermsArg,
    #[arg(long)]
    out: PathBuf,
    /// Per-pair consistency flags as JSONL.
    #[arg(long)]
    flags: Option<PathBuf>,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    test: PathBuf,
    /// name=path, repeatable; one output per line aligned to the test set.
    #[arg(long = "hyp", required = true, value_parser = parse_hyp)]
    hyps: Vec<(String, PathBuf)>,
    /// Tokenization language; inferred when the test set has one language.
    #[arg(long)]
    lang: Option<Lang>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Pairs per language.
    #[arg(long, default_value_t = 25)]
    per_lang: usize,
    #[arg(long, default_value_t = clinorm_core::synth::BUNDLED_SEED)]
    seed: u64,
    #[arg(long)]
    lang: Option<Lang>,
    #[command(flatten)]
    terms: TermsArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Lang {
    Zh,
    En,
}

impl From<Lang> for clinorm_core::Language {
    fn from(l: Lang) -> Self {
        match l {
            Lang::Zh => clinorm_core::Language::Zh,
            Lang::En => clinorm_core::Language::En,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    #[value(alias = "md")]
    Markdown,
    Csv,
}

impl From<Format> for clinorm_core::eval::TableFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Markdown => clinorm_core::eval::TableFormat::Markdown,
            Format::Csv => clinorm_core::eval::TableFormat::Csv,
        }
    }
}

fn parse_hyp(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.trim().is_empty() && !path.is_empty() => {
            Ok((name.trim().to_string(), PathBuf::from(path)))
        }
        _ => Err(format!("expected name=path, got {s:?}")),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ExtractTerms(a) => commands::extract_terms(a),
        Command::ValidateTerms(a) => commands::validate_terms(a),
        Command::Augment(a) => commands::augment(a),
        Command::Standardize(a) => commands::standardize(a),
        Command::Filter(a) => commands::filter(a),
        Command::Translate(a) => commands::translate(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Pipeline(a) => pipeline::run(a),
        Command::Synth(a) => commands::synth(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
