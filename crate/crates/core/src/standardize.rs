//! Rule-based standardization: structured findings from free text, and the
//! canonical rendering of those findings.
//!
//! Rendered reports look like `OD: vitreous opacity; OS: no drusen.` in
//! English and `OD：玻璃体混浊；OS：无玻璃膜疣。` in Chinese.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{detect_language, Language};
use crate::terminology::{free_cue_spans, match_terms, Polarity, TermMatch, Terminology};
use crate::text::{find_all, fold_char, is_decimal_point, is_sentence_delim};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Laterality {
    #[serde(rename = "OD")]
    Od,
    #[serde(rename = "OS")]
    Os,
    #[serde(rename = "OU")]
    Ou,
    #[serde(rename = "unspecified")]
    Unspecified,
}

impl Laterality {
    pub fn abbrev(self) -> Option<&'static str> {
        match self {
            Laterality::Od => Some("OD"),
            Laterality::Os => Some("OS"),
            Laterality::Ou => Some("OU"),
            Laterality::Unspecified => None,
        }
    }
}

impl fmt::Display for Laterality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbrev().unwrap_or("unspecified"))
    }
}

/// Laterality marker lexicon, matched case-insensitively on word boundaries.
pub const LATERALITY_MARKERS: [(&str, Laterality); 9] = [
    ("右眼", Laterality::Od),
    ("左眼", Laterality::Os),
    ("双眼", Laterality::Ou),
    ("od", Laterality::Od),
    ("os", Laterality::Os),
    ("ou", Laterality::Ou),
    ("right eye", Laterality::Od),
    ("left eye", Laterality::Os),
    ("both eyes", Laterality::Ou),
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Finding {
    pub laterality: Laterality,
    pub term_id: String,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandardReport {
    pub findings: Vec<Finding>,
    pub lang: Language,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StandardizeError {
    #[error("unknown term_id {0}")]
    UnknownTerm(String),
}

/// Term matches, laterality markers and free negation cues of one text.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub chars: Vec<char>,
    pub matches: Vec<TermMatch>,
    pub markers: Vec<(usize, usize, Laterality)>,
    pub cues: Vec<(usize, usize)>,
}

impl Analysis {
    fn sentence_start(&self, pos: usize) -> usize {
        (0..pos)
            .rev()
            .find(|&k| is_sentence_delim(self.chars[k]) && !is_decimal_point(&self.chars, k))
            .map_or(0, |k| k + 1)
    }

    /// Nearest marker ending at or before `pos` in the same sentence.
    pub fn laterality_at(&self, pos: usize) -> Laterality {
        let from = self.sentence_start(pos);
        self.markers
            .iter()
            .rev()
            .find(|&&(s, e, _)| s >= from && e <= pos)
            .map_or(Laterality::Unspecified, |&(_, _, l)| l)
    }

    /// Every finding in mention order, duplicates kept.
    pub fn findings(&self) -> Vec<Finding> {
        self.matches
            .iter()
            .map(|m| Finding {
                laterality: self.laterality_at(m.start),
                term_id: m.term_id.clone(),
                polarity: m.polarity,
            })
            .collect()
    }
}

fn overlaps(s: usize, e: usize, taken: &[(usize, usize)]) -> bool {
    taken.iter().any(|&(ts, te)| s < te && ts < e)
}

pub fn analyze(text: &str, t: &Terminology) -> Analysis {
    let chars: Vec<char> = text.chars().map(fold_char).collect();
    let matches = match_terms(text, t);
    let taken: Vec<(usize, usize)> = matches.iter().map(|m| (m.start, m.end)).collect();
    let mut markers: Vec<(usize, usize, Laterality)> = LATERALITY_MARKERS
        .iter()
        .flat_map(|&(surface, lat)| {
            let needle: Vec<char> = surface.chars().collect();
            find_all(&chars, &needle)
                .into_iter()
                .map(move |(s, e)| (s, e, lat))
        })
        .filter(|&(s, e, _)| !overlaps(s, e, &taken))
        .collect();
    markers.sort_unstable();
    let cues = free_cue_spans(&chars, t.cues(), &taken);
    Analysis {
        chars,
        matches,
        markers,
        cues,
    }
}

/// Structured findings of `text`: laterality from the nearest preceding
/// marker in the same sentence, first occurrence of each (laterality, term)
/// kept.
pub fn standardize_rule_based(text: &str, t: &Terminology) -> StandardReport {
    let lang = detect_language(text).unwrap_or(Language::En);
    let mut seen = HashSet::new();
    let findings = analyze(text, t)
        .findings()
        .into_iter()
        .filter(|f| seen.insert((f.laterality, f.term_id.clone())))
        .collect();
    StandardReport { findings, lang }
}

pub fn render_standard_report(r: &StandardReport, t: &Terminology) -> Result<String, StandardizeError> {
    if r.findings.is_empty() {
        return Ok(String::new());
    }
    let (colon, negation, sep, stop) = match r.lang {
        Language::En => (": ", "no ", "; ", "."),
        Language::Zh => ("：", "无", "；", "。"),
    };
    let mut parts = Vec::with_capacity(r.findings.len());
    for f in &r.findings {
        let entry = t
            .get(&f.term_id)
            .ok_or_else(|| StandardizeError::UnknownTerm(f.term_id.clone()))?;
        let mut s = String::new();
        if let Some(abbrev) = f.laterality.abbrev() {
            s.push_str(abbrev);
            s.push_str(colon);
        }
        if f.polarity == Polarity::Negated {
            s.push_str(negation);
        }
        s.push_str(entry.canonical(r.lang));
        parts.push(s);
    }
    Ok(parts.join(sep) + stop)
}

/// Standardize and render in one step.
pub fn standardize_text(text: &str, t: &Terminology) -> String {
    let report = standardize_rule_based(text, t);
    render_standard_report(&report, t).expect("matched terms resolve")
}
