use std::path::{Path, PathBuf};

use clap::Args;
use clinorm_core::augment::{augment_corpus, AugmentConfig};
use clinorm_core::eval::{render_table, run_evaluation, TableFormat};
use clinorm_core::filter::{filter_pipeline, DEFAULT_THRESHOLD};
use clinorm_core::standardize::standardize_text;
use clinorm_core::synth::bundled_corpus;
use clinorm_core::Language;
use log::info;
use serde::Deserialize;
use serde_json::json;

use crate::commands::{candidates_tsv, confusion_tables, corpus, terminology, write_file};
use crate::error::{CliError, CliResult};
use crate::Format;

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// TOML pipeline config; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input corpus; the bundled synthetic corpus when omitted.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    terms: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Augmented size per language.
    #[arg(long)]
    target_size: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PipelineConfig {
    corpus: Option<PathBuf>,
    terms: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    target_size: Option<usize>,
    threshold: Option<f64>,
    format: Option<String>,
    min_freq: Option<usize>,
    max_len: Option<usize>,
    confusion_zh: Option<PathBuf>,
    confusion_en: Option<PathBuf>,
    augment: Option<AugmentConfig>,
    /// Client settings for LLM steps; not used by the offline chain.
    llm: Option<toml::Table>,
}

impl PipelineConfig {
    fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.corpus,
            &mut cfg.terms,
            &mut cfg.out_dir,
            &mut cfg.confusion_zh,
            &mut cfg.confusion_en,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

pub fn run(a: PipelineArgs) -> CliResult {
    let cfg = match &a.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let corpus_path = a.corpus.or(cfg.corpus);
    let terms_path = a.terms.or(cfg.terms);
    let out_dir = a.out_dir.or(cfg.out_dir).unwrap_or_else(|| PathBuf::from("pipeline_out"));
    let mut aug = cfg.augment.unwrap_or_default();
    if let Some(seed) = a.seed.or(cfg.seed) {
        aug.seed = seed;
    }
    let target = a.target_size.or(cfg.target_size).unwrap_or(200);
    let threshold = a.threshold.or(cfg.threshold).unwrap_or(DEFAULT_THRESHOLD);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::usage(format!("threshold {threshold} is outside [0, 1]")));
    }
    let format: TableFormat = match (a.format, cfg.format) {
        (Some(f), _) => f.into(),
        (None, Some(s)) => s.parse()?,
        (None, None) => TableFormat::Markdown,
    };
    let (min_freq, max_len) = (cfg.min_freq.unwrap_or(3), cfg.max_len.unwrap_or(4));

    let t = terminology(terms_path.as_deref())?;
    let source = match &corpus_path {
        Some(p) => corpus(p)?,
        None => bundled_corpus(),
    };
    let tables = confusion_tables(cfg.confusion_zh.as_deref(), cfg.confusion_en.as_deref())?;
    let ext = match format {
        TableFormat::Markdown => "md",
        TableFormat::Csv => "csv",
    };

    let mut summary = serde_json::Map::new();
    for lang in Language::ALL {
        let sub = source.by_language(lang);
        if sub.is_empty() {
            continue;
        }
        let dir = out_dir.join(lang.tag());
        write_file(&dir.join("candidates.tsv"), &candidates_tsv(&sub, lang, min_freq, max_len, Some(&t))?)?;

        let augmented = augment_corpus(&sub, &t, &aug, &tables, target.max(sub.len()))?;
        write_file(&dir.join("augmented.jsonl"), &augmented.to_jsonl())?;

        let filtered = filter_pipeline(&augmented, &t, threshold);
        filtered.write(&dir).map_err(|e| CliError::io(&dir, e))?;
        if filtered.kept.is_empty() {
            return Err(CliError::data(format!("{}: filtering kept no pairs", lang.tag())));
        }

        let rule: Vec<String> = filtered.kept.iter().map(|p| standardize_text(&p.original, &t)).collect();
        let copy: Vec<String> = filtered.kept.iter().map(|p| p.original.clone()).collect();
        write_file(&dir.join("hyp_rule.txt"), &(rule.join("\n") + "\n"))?;
        let runs = run_evaluation(
            &filtered.kept,
            &[("rule-based".to_string(), rule), ("copy-original".to_string(), copy)],
            lang,
        )?;
        let table = render_table(&runs, format);
        write_file(&dir.join(format!("table.{ext}")), &table)?;
        info!("{}: {} -> {} pairs, {} kept", lang.tag(), sub.len(), augmented.len(), filtered.kept.len());
        println!("## {}\n\n{table}", lang.tag());
        summary.insert(
            lang.tag().to_string(),
            json!({
                "source": sub.len(),
                "augmented": augmented.len(),
                "filter": serde_json::from_str::<serde_json::Value>(&filtered.summary()).expect("summary is JSON"),
            }),
        );
    }
    if summary.is_empty() {
        return Err(CliError::data("corpus has no pairs"));
    }
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write_file(&out_dir.join("summary.json"), &text)
}
