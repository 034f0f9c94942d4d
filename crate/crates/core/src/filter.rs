//! Quality filtering of generated pairs: logical conflicts, terminology
//! errors, and near-duplicate removal by character-trigram Jaccard similarity.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::corpus::{Corpus, ReportPair};
use crate::num::Scalar;
use crate::standardize::analyze;
use crate::terminology::Terminology;
use crate::text::{fold, is_cjk};

/// Default similarity threshold for deduplication.
pub const DEFAULT_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason")]
pub enum RejectReason {
    LogicalConflict { term_ids: Vec<String> },
    TerminologyError { unknown: Vec<String> },
    NearDuplicate { other_id: String, similarity: f64 },
}

impl RejectReason {
    pub fn name(&self) -> &'static str {
        match self {
            RejectReason::LogicalConflict { .. } => "LogicalConflict",
            RejectReason::TerminologyError { .. } => "TerminologyError",
            RejectReason::NearDuplicate { .. } => "NearDuplicate",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterReport {
    pub kept: Corpus,
    pub rejected: Vec<(ReportPair, RejectReason)>,
}

impl FilterReport {
    pub fn total(&self) -> usize {
        self.kept.len() + self.rejected.len()
    }

    pub fn count(&self, reason: &str) -> usize {
        self.rejected.iter().filter(|(_, r)| r.name() == reason).count()
    }

    pub fn rejected_jsonl(&self) -> String {
        let mut out = String::new();
        for (pair, reason) in &self.rejected {
            let mut obj = serde_json::to_value(pair).expect("pair serializes");
            let extra = serde_json::to_value(reason).expect("reason serializes");
            if let (Some(o), Some(e)) = (obj.as_object_mut(), extra.as_object()) {
                for (k, v) in e {
                    o.insert(k.clone(), v.clone());
                }
            }
            out.push_str(&obj.to_string());
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        json!({
            "input": self.total(),
            "kept": self.kept.len(),
            "rejected": self.rejected.len(),
            "LogicalConflict": self.count("LogicalConflict"),
            "TerminologyError": self.count("TerminologyError"),
            "NearDuplicate": self.count("NearDuplicate"),
        })
        .to_string()
    }

    /// Write `kept.jsonl` and `rejected.jsonl` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> std::io::Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::File::create(dir.join("kept.jsonl"))?.write_all(self.kept.to_jsonl().as_bytes())?;
        fs::File::create(dir.join("rejected.jsonl"))?.write_all(self.rejected_jsonl().as_bytes())
    }
}

/// term_ids asserted and negated under the same laterality, in first-seen order.
pub fn check_logical_conflict(standard_text: &str, t: &Terminology) -> Vec<String> {
    let findings = analyze(standard_text, t).findings();
    let mut out: Vec<String> = Vec::new();
    for f in &findings {
        if out.contains(&f.term_id) {
            continue;
        }
        if findings.iter().any(|g| {
            g.term_id == f.term_id && g.laterality == f.laterality && g.polarity != f.polarity
        }) {
            out.push(f.term_id.clone());
        }
    }
    out
}

/// A residual token not covered by terminology, markers or cues.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnknownSpan {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// Residual alphabetic or ideographic tokens of length >= 2 once matched
/// terms, laterality markers, negation cues, punctuation and numerals are
/// removed.
pub fn check_terminology(standard_text: &str, t: &Terminology) -> Vec<UnknownSpan> {
    let a = analyze(standard_text, t);
    let source: Vec<char> = standard_text.chars().collect();
    let mut covered = vec![false; source.len()];
    let spans = a
        .matches
        .iter()
        .map(|m| (m.start, m.end))
        .chain(a.markers.iter().map(|&(s, e, _)| (s, e)))
        .chain(a.cues.iter().copied());
    for (s, e) in spans {
        covered[s..e].iter_mut().for_each(|c| *c = true);
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < source.len() {
        let wordy = |k: usize| !covered[k] && (source[k].is_alphabetic() || is_cjk(source[k]));
        if !wordy(i) {
            i += 1;
            continue;
        }
        let start = i;
        while i < source.len() && wordy(i) {
            i += 1;
        }
        if i - start >= 2 {
            out.push(UnknownSpan {
                start,
                end: i,
                text: source[start..i].iter().collect(),
            });
        }
    }
    out
}

/// Character-trigram shingles of the lowercased, whitespace-free text.
/// Texts shorter than three characters become a single shingle.
pub fn shingles(text: &str) -> HashSet<String> {
    let chars: Vec<char> = fold(text).chars().filter(|c| !c.is_whitespace()).collect();
    if chars.is_empty() {
        return HashSet::new();
    }
    if chars.len() < 3 {
        return HashSet::from([chars.iter().collect()]);
    }
    chars.windows(3).map(|w| w.iter().collect()).collect()
}

fn jaccard<F: Scalar>(a: &HashSet<String>, b: &HashSet<String>) -> F {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return F::one(),
        (true, false) | (false, true) => return F::zero(),
        _ => {}
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    F::count(inter) / F::count(union)
}

/// Jaccard coefficient of character-trigram sets, in `[0, 1]`.
pub fn similarity<F: Scalar>(a: &str, b: &str) -> F {
    jaccard(&shingles(a), &shingles(b))
}

/// Single pass in corpus order. A pair is dropped when its `original`
/// similarity to some already-kept pair is strictly above `threshold`; the
/// reason names the most similar kept pair (earliest on ties).
pub fn dedup_corpus(c: &Corpus, threshold: f64) -> FilterReport {
    let mut kept: Vec<(usize, HashSet<String>)> = Vec::new();
    let mut rejected = Vec::new();
    for (i, pair) in c.iter().enumerate() {
        let sh = shingles(&pair.original);
        let best = kept
            .par_iter()
            .map(|(k, ksh)| (jaccard::<f64>(&sh, ksh), *k))
            .filter(|&(s, _)| s > threshold)
            .reduce_with(|a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            });
        match best {
            Some((s, k)) => rejected.push((
                pair.clone(),
                RejectReason::NearDuplicate {
                    other_id: c.pairs[k].id.clone(),
                    similarity: s,
                },
            )),
            None => kept.push((i, sh)),
        }
    }
    FilterReport {
        kept: Corpus {
            pairs: kept.into_iter().map(|(i, _)| c.pairs[i].clone()).collect(),
        },
        rejected,
    }
}

/// Conflict check, then terminology check (both on the standard side), then
/// dedup. Each rejection carries the first failing stage; rejections are
/// listed in input order.
pub fn filter_pipeline(c: &Corpus, t: &Terminology, threshold: f64) -> FilterReport {
    let verdicts: Vec<Option<RejectReason>> = c
        .pairs
        .par_iter()
        .map(|p| {
            let conflicts = check_logical_conflict(&p.standard, t);
            if !conflicts.is_empty() {
                return Some(RejectReason::LogicalConflict { term_ids: conflicts });
            }
            let unknown = check_terminology(&p.standard, t);
            if !unknown.is_empty() {
                return Some(RejectReason::TerminologyError {
                    unknown: unknown.into_iter().map(|u| u.text).collect(),
                });
            }
            None
        })
        .collect();
    let mut early: Vec<(usize, RejectReason)> = Vec::new();
    let mut survivors = Vec::new();
    let mut index_of = Vec::new();
    for (i, (p, v)) in c.pairs.iter().zip(verdicts).enumerate() {
        match v {
            Some(reason) => early.push((i, reason)),
            None => {
                survivors.push(p.clone());
                index_of.push(i);
            }
        }
    }
    let dedup = dedup_corpus(&Corpus { pairs: survivors }, threshold);
    let mut all: Vec<(usize, ReportPair, RejectReason)> = early
        .into_iter()
        .map(|(i, r)| (i, c.pairs[i].clone(), r))
        .collect();
    // map dedup rejections back to input positions via their (unique) ids
    for (pair, reason) in dedup.rejected {
        let i = c.pairs.iter().position(|p| p.id == pair.id).unwrap_or(usize::MAX);
        all.push((i, pair, reason));
    }
    all.sort_by_key(|(i, _, _)| *i);
    FilterReport {
        kept: dedup.kept,
        rejected: all.into_iter().map(|(_, p, r)| (p, r)).collect(),
    }
}
