//! Evaluation runs over a test set and result tables.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{Corpus, Language};
use crate::metrics::{evaluate_corpus, MetricError};
use crate::MetricScores;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("system {system}: {outputs} outputs for {references} test pairs")]
    Misaligned {
        system: String,
        outputs: usize,
        references: usize,
    },
    #[error("empty test set")]
    EmptyTestSet,
    #[error("no system runs to render")]
    NoRuns,
    #[error("unknown table format {0:?} (expected markdown or csv)")]
    UnknownFormat(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// One results-table row.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemRun {
    pub system_name: String,
    pub scores: MetricScores,
    pub n_pairs: usize,
    pub lang: Language,
}

/// Score each system's outputs against the `standard` side of `test_set`.
/// Rows come back sorted by BLEU-1, highest first (ties by name).
pub fn run_evaluation(
    test_set: &Corpus,
    outputs: &[(String, Vec<String>)],
    lang: Language,
) -> Result<Vec<SystemRun>, EvalError> {
    if test_set.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let references: Vec<String> = test_set.iter().map(|p| p.standard.clone()).collect();
    let mut runs = Vec::with_capacity(outputs.len());
    for (name, hyps) in outputs {
        if hyps.len() != references.len() {
            return Err(EvalError::Misaligned {
                system: name.clone(),
                outputs: hyps.len(),
                references: references.len(),
            });
        }
        runs.push(SystemRun {
            system_name: name.clone(),
            scores: evaluate_corpus(hyps, &references, lang)?,
            n_pairs: hyps.len(),
            lang,
        });
    }
    runs.sort_by(|a, b| {
        b.scores
            .bleu1
            .total_cmp(&a.scores.bleu1)
            .then_with(|| a.system_name.cmp(&b.system_name))
    });
    Ok(runs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

impl FromStr for TableFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            other => Err(EvalError::UnknownFormat(other.to_string())),
        }
    }
}

const HEADER: [&str; 5] = ["System", "BLEU-1", "BLEU-4", "METEOR", "ROUGE-L"];

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Render rows in the given order, scores to two decimals.
pub fn render_table(runs: &[SystemRun], format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Markdown => {
            let _ = writeln!(out, "| {} |", HEADER.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(HEADER.len()));
        }
        TableFormat::Csv => {
            let _ = writeln!(out, "{}", HEADER.join(","));
        }
    }
    for run in runs {
        let values: Vec<String> = run
            .scores
            .rounded()
            .as_array()
            .iter()
            .map(|v| format!("{v:.2}"))
            .collect();
        match format {
            TableFormat::Markdown => {
                let _ = writeln!(out, "| {} | {} |", run.system_name, values.join(" | "));
            }
            TableFormat::Csv => {
                let _ = writeln!(out, "{},{}", csv_field(&run.system_name), values.join(","));
            }
        }
    }
    out
}

/// Plain-text hypotheses: one output per line.
pub fn parse_hypotheses(text: &str) -> Vec<String> {
    let mut lines: Vec<String> = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_string())
        .collect();
    if text.ends_with('\n') || text.is_empty() {
        lines.pop();
    }
    lines
}
