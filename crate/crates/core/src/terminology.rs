//! Bilingual standard terminology: loading, validation, term matching with
//! negation scope, and frequent-phrase candidate extraction.
//!
//! Surfaces (canonical forms and synonyms, both languages) are indexed after
//! case folding. Matching is greedy longest-match from left to right; Latin
//! surfaces must sit on word boundaries, ideographic ones need not.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Language};
use crate::metrics::tokenize;
use crate::text::{at_boundaries, find_all, fold, fold_char, is_cjk, is_clause_delim, is_decimal_point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Disease,
    Symptom,
    Indicator,
    Descriptive,
}

impl FromStr for Category {
    type Err = TermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "disease" => Ok(Category::Disease),
            "symptom" => Ok(Category::Symptom),
            "indicator" => Ok(Category::Indicator),
            "descriptive" => Ok(Category::Descriptive),
            _ => Err(TermError::Parse(format!("unknown category {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "ICD11")]
    Icd11,
    #[serde(rename = "PPP")]
    Ppp,
    #[serde(rename = "SNOMEDCT")]
    SnomedCt,
    #[serde(rename = "corpus")]
    Corpus,
}

impl FromStr for Source {
    type Err = TermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "icd11" => Ok(Source::Icd11),
            "ppp" => Ok(Source::Ppp),
            "snomedct" => Ok(Source::SnomedCt),
            "corpus" => Ok(Source::Corpus),
            _ => Err(TermError::Parse(format!("unknown source {s:?}"))),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Icd11 => "ICD11",
            Source::Ppp => "PPP",
            Source::SnomedCt => "SNOMEDCT",
            Source::Corpus => "corpus",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermEntry {
    pub term_id: String,
    pub category: Category,
    pub zh: String,
    pub en: String,
    #[serde(default)]
    pub synonyms_zh: BTreeSet<String>,
    #[serde(default)]
    pub synonyms_en: BTreeSet<String>,
    pub source: Source,
}

impl TermEntry {
    pub fn canonical(&self, lang: Language) -> &str {
        match lang {
            Language::Zh => &self.zh,
            Language::En => &self.en,
        }
    }

    pub fn synonyms(&self, lang: Language) -> &BTreeSet<String> {
        match lang {
            Language::Zh => &self.synonyms_zh,
            Language::En => &self.synonyms_en,
        }
    }

    /// Every surface with its language and whether it is canonical.
    fn surfaces(&self) -> impl Iterator<Item = (&str, Language, bool)> {
        [(self.zh.as_str(), Language::Zh, true), (self.en.as_str(), Language::En, true)]
            .into_iter()
            .chain(self.synonyms_zh.iter().map(|s| (s.as_str(), Language::Zh, false)))
            .chain(self.synonyms_en.iter().map(|s| (s.as_str(), Language::En, false)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateId(String),
    AmbiguousSurface {
        surface: String,
        first: String,
        second: String,
    },
    EmptyField {
        term_id: String,
        field: &'static str,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId(id) => write!(f, "duplicate term_id {id}"),
            Violation::AmbiguousSurface {
                surface,
                first,
                second,
            } => write!(f, "surface {surface:?} claimed by both {first} and {second}"),
            Violation::EmptyField { term_id, field } => {
                write!(f, "entry {term_id}: empty field {field}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum TermError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("line {line}: {message}")]
    AtLine { line: usize, message: String },
    #[error("invalid terminology: {0}")]
    Invalid(Violation),
    #[error("{0}")]
    InvalidArgument(String),
}

/// Report every duplicate id, ambiguous surface and empty required field.
pub fn validate_entries(entries: &[TermEntry]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut ids: HashMap<&str, ()> = HashMap::new();
    let mut owners: HashMap<String, &str> = HashMap::new();
    for e in entries {
        for (field, value) in [("term_id", &e.term_id), ("zh", &e.zh), ("en", &e.en)] {
            if value.trim().is_empty() {
                out.push(Violation::EmptyField {
                    term_id: e.term_id.clone(),
                    field,
                });
            }
        }
        if ids.insert(&e.term_id, ()).is_some() {
            out.push(Violation::DuplicateId(e.term_id.clone()));
            continue;
        }
        for (surface, _, _) in e.surfaces() {
            let key = fold(surface.trim());
            if key.is_empty() {
                continue;
            }
            match owners.get(&key) {
                Some(&owner) if owner != e.term_id => out.push(Violation::AmbiguousSurface {
                    surface: key,
                    first: owner.to_string(),
                    second: e.term_id.clone(),
                }),
                Some(_) => {}
                None => {
                    owners.insert(key, &e.term_id);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurfaceInfo {
    pub entry: usize,
    pub lang: Language,
    pub canonical: bool,
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: HashMap<char, usize>,
    terminal: bool,
}

#[derive(Debug, Clone)]
struct Trie {
    nodes: Vec<TrieNode>,
}

impl Trie {
    fn new() -> Self {
        Self {
            nodes: vec![TrieNode::default()],
        }
    }

    fn insert(&mut self, key: &str) {
        let mut at = 0;
        for c in key.chars() {
            at = match self.nodes[at].children.get(&c) {
                Some(&n) => n,
                None => {
                    self.nodes.push(TrieNode::default());
                    let n = self.nodes.len() - 1;
                    self.nodes[at].children.insert(c, n);
                    n
                }
            };
        }
        self.nodes[at].terminal = true;
    }

    /// End offsets of every key that starts at `start`, shortest first.
    fn prefixes_at(&self, chars: &[char], start: usize) -> Vec<usize> {
        let mut ends = Vec::new();
        let mut at = 0;
        for (i, c) in chars[start..].iter().enumerate() {
            match self.nodes[at].children.get(c) {
                Some(&n) => at = n,
                None => break,
            }
            if self.nodes[at].terminal {
                ends.push(start + i + 1);
            }
        }
        ends
    }
}

/// Negation cue lexicon. Both lists apply to any text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegationCues {
    pub zh: Vec<String>,
    pub en: Vec<String>,
}

impl Default for NegationCues {
    fn default() -> Self {
        Self {
            zh: ["无", "未见", "不伴", "(-)", "阴性"].map(String::from).to_vec(),
            en: ["no", "without", "absent", "negative for", "(-)"]
                .map(String::from)
                .to_vec(),
        }
    }
}

impl NegationCues {
    /// Folded cue occurrences in `chars`, sorted by start.
    pub fn spans(&self, chars: &[char]) -> Vec<(usize, usize)> {
        let mut spans: Vec<(usize, usize)> = self
            .zh
            .iter()
            .chain(&self.en)
            .flat_map(|cue| {
                let needle: Vec<char> = cue.chars().map(fold_char).collect();
                find_all(chars, &needle)
            })
            .collect();
        spans.sort_unstable();
        spans.dedup();
        spans
    }
}

#[derive(Debug, Clone)]
pub struct Terminology {
    entries: Vec<TermEntry>,
    by_surface: HashMap<String, SurfaceInfo>,
    index: HashMap<String, usize>,
    trie: Trie,
    cues: NegationCues,
}

impl Terminology {
    /// Validate and index `entries`; the first violation aborts.
    pub fn new(entries: Vec<TermEntry>) -> Result<Self, TermError> {
        if let Some(v) = validate_entries(&entries).into_iter().next() {
            return Err(TermError::Invalid(v));
        }
        let mut by_surface = HashMap::new();
        let mut index = HashMap::new();
        let mut trie = Trie::new();
        for (i, e) in entries.iter().enumerate() {
            index.insert(e.term_id.clone(), i);
            for (surface, lang, canonical) in e.surfaces() {
                let key = fold(surface.trim());
                if key.is_empty() || by_surface.contains_key(&key) {
                    continue;
                }
                trie.insert(&key);
                by_surface.insert(
                    key,
                    SurfaceInfo {
                        entry: i,
                        lang,
                        canonical,
                    },
                );
            }
        }
        Ok(Self {
            entries,
            by_surface,
            index,
            trie,
            cues: NegationCues::default(),
        })
    }

    pub fn with_cues(mut self, cues: NegationCues) -> Self {
        self.cues = cues;
        self
    }

    pub fn cues(&self) -> &NegationCues {
        &self.cues
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[TermEntry] {
        &self.entries
    }

    pub fn get(&self, term_id: &str) -> Option<&TermEntry> {
        self.index.get(term_id).map(|&i| &self.entries[i])
    }

    /// term_id owning a surface (case-insensitive).
    pub fn lookup(&self, surface: &str) -> Option<&str> {
        self.surface_info(surface)
            .map(|info| self.entries[info.entry].term_id.as_str())
    }

    pub fn surface_info(&self, surface: &str) -> Option<SurfaceInfo> {
        self.by_surface.get(&fold(surface.trim())).copied()
    }

    pub fn contains_surface(&self, surface: &str) -> bool {
        self.by_surface.contains_key(&fold(surface.trim()))
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_entries(&self.entries)
    }

    /// Canonical surfaces for one language in entry order.
    pub fn canonical_surfaces(&self, lang: Language) -> impl Iterator<Item = &str> {
        self.entries.iter().map(move |e| e.canonical(lang))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Asserted,
    Negated,
}

impl Polarity {
    pub fn flipped(self) -> Self {
        match self {
            Polarity::Asserted => Polarity::Negated,
            Polarity::Negated => Polarity::Asserted,
        }
    }
}

/// One term occurrence. `start`/`end` are codepoint offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermMatch {
    pub start: usize,
    pub end: usize,
    pub term_id: String,
    pub polarity: Polarity,
    pub matched_surface: String,
    pub surface_lang: Language,
    pub canonical: bool,
}

/// Greedy longest-match scan without polarity assignment.
pub(crate) fn scan_spans(chars: &[char], t: &Terminology) -> Vec<(usize, usize, SurfaceInfo)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let hit = t
            .trie
            .prefixes_at(chars, i)
            .into_iter()
            .rev()
            .find(|&end| at_boundaries(chars, i, end));
        match hit {
            Some(end) => {
                let key: String = chars[i..end].iter().collect();
                out.push((i, end, t.by_surface[&key]));
                i = end;
            }
            None => i += 1,
        }
    }
    out
}

/// Start of the clause containing offset `pos`.
pub(crate) fn clause_start(chars: &[char], pos: usize) -> usize {
    (0..pos)
        .rev()
        .find(|&k| is_clause_delim(chars[k]) && !is_decimal_point(chars, k))
        .map_or(0, |k| k + 1)
}

/// Cue spans not overlapping any of `taken`.
pub(crate) fn free_cue_spans(
    chars: &[char],
    cues: &NegationCues,
    taken: &[(usize, usize)],
) -> Vec<(usize, usize)> {
    cues.spans(chars)
        .into_iter()
        .filter(|&(s, e)| taken.iter().all(|&(ts, te)| e <= ts || s >= te))
        .collect()
}

/// Find terminology mentions in `text`.
///
/// A match is negated when a cue ends at or before the match start inside
/// the same clause (clauses end at `，,;；。.`, decimal points excepted).
/// Cues that fall inside a matched term surface are not cues.
pub fn match_terms(text: &str, t: &Terminology) -> Vec<TermMatch> {
    let source: Vec<char> = text.chars().collect();
    let chars: Vec<char> = source.iter().copied().map(fold_char).collect();
    let spans = scan_spans(&chars, t);
    let taken: Vec<(usize, usize)> = spans.iter().map(|&(s, e, _)| (s, e)).collect();
    let cues = free_cue_spans(&chars, &t.cues, &taken);
    spans
        .into_iter()
        .map(|(start, end, info)| {
            let from = clause_start(&chars, start);
            let negated = cues.iter().any(|&(cs, ce)| cs >= from && ce <= start);
            TermMatch {
                start,
                end,
                term_id: t.entries[info.entry].term_id.clone(),
                polarity: if negated {
                    Polarity::Negated
                } else {
                    Polarity::Asserted
                },
                matched_surface: source[start..end].iter().collect(),
                surface_lang: info.lang,
                canonical: info.canonical,
            }
        })
        .collect()
}

const TSV_COLUMNS: [&str; 7] = [
    "term_id",
    "category",
    "zh",
    "en",
    "synonyms_zh",
    "synonyms_en",
    "source",
];

fn split_synonyms(cell: &str) -> BTreeSet<String> {
    cell.split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

/// Parse terminology TSV (header row required, columns in any order).
pub fn parse_tsv(text: &str) -> Result<Vec<TermEntry>, TermError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| TermError::Parse("missing header row".into()))?;
    let header: Vec<&str> = header.split('\t').map(str::trim).collect();
    let mut col = [0usize; 7];
    for (slot, name) in col.iter_mut().zip(TSV_COLUMNS) {
        *slot = header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| TermError::Parse(format!("header lacks column {name}")))?;
    }
    let mut entries = Vec::new();
    for (idx, line) in lines {
        let cells: Vec<&str> = line.split('\t').collect();
        let cell = |k: usize| cells.get(col[k]).map_or("", |c| c.trim());
        let at = |message: String| TermError::AtLine {
            line: idx + 1,
            message,
        };
        entries.push(TermEntry {
            term_id: cell(0).to_string(),
            category: cell(1).parse().map_err(|e: TermError| at(e.to_string()))?,
            zh: cell(2).to_string(),
            en: cell(3).to_string(),
            synonyms_zh: split_synonyms(cell(4)),
            synonyms_en: split_synonyms(cell(5)),
            source: cell(6).parse().map_err(|e: TermError| at(e.to_string()))?,
        });
    }
    Ok(entries)
}

pub fn to_tsv(entries: &[TermEntry]) -> String {
    let mut out = TSV_COLUMNS.join("\t");
    out.push('\n');
    for e in entries {
        let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join("|");
        let category = serde_json::to_value(e.category).expect("category serializes");
        out.push_str(
            &[
                e.term_id.as_str(),
                category.as_str().unwrap_or_default(),
                &e.zh,
                &e.en,
                &join(&e.synonyms_zh),
                &join(&e.synonyms_en),
                &e.source.to_string(),
            ]
            .join("\t"),
        );
        out.push('\n');
    }
    out
}

/// Parse entries from TSV or a JSON array, without validating them.
pub fn parse_entries(text: &str) -> Result<Vec<TermEntry>, TermError> {
    if text.trim_start().starts_with('[') {
        serde_json::from_str(text).map_err(|e| TermError::Parse(e.to_string()))
    } else {
        parse_tsv(text)
    }
}

pub fn read_entries(path: impl AsRef<Path>) -> Result<Vec<TermEntry>, TermError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| TermError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_entries(&text)
}

pub fn load_terminology(path: impl AsRef<Path>) -> Result<Terminology, TermError> {
    Terminology::new(read_entries(path)?)
}

/// The bundled illustrative fundus terminology.
pub fn reference_terminology() -> Terminology {
    let entries = parse_tsv(include_str!("../data/terminology.tsv")).expect("bundled terminology parses");
    Terminology::new(entries).expect("bundled terminology is valid")
}

fn join_tokens(tokens: &[String]) -> String {
    let mut out = String::new();
    for (i, tok) in tokens.iter().enumerate() {
        if i > 0 {
            let prev_latin = !tokens[i - 1].chars().all(is_cjk);
            let this_latin = !tok.chars().all(is_cjk);
            if prev_latin && this_latin {
                out.push(' ');
            }
        }
        out.push_str(tok);
    }
    out
}

/// Count contiguous token n-grams (1..=max_len) over the `original` side of
/// reports in `lang`, keeping those seen at least `min_freq` times.
///
/// English counts words, Chinese counts characters (Latin runs inside
/// Chinese text stay whole). Phrases already known to `known` are dropped.
/// Results are sorted by frequency descending, then phrase.
pub fn extract_candidate_phrases(
    corpus: &Corpus,
    lang: Language,
    min_freq: usize,
    max_len: usize,
    known: Option<&Terminology>,
) -> Result<Vec<(String, usize)>, TermError> {
    if min_freq == 0 || max_len == 0 {
        return Err(TermError::InvalidArgument(
            "min_freq and max_len must be at least 1".into(),
        ));
    }
    let mut counts: HashMap<Vec<String>, usize> = HashMap::new();
    for pair in corpus.iter().filter(|p| p.lang == lang) {
        let tokens = tokenize(&pair.original, lang).tokens;
        for n in 1..=max_len.min(tokens.len()) {
            for gram in tokens.windows(n) {
                *counts.entry(gram.to_vec()).or_default() += 1;
            }
        }
    }
    let mut out: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_freq)
        .map(|(g, c)| (join_tokens(&g), c))
        .filter(|(p, _)| known.is_none_or(|t| !t.contains_surface(p)))
        .collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}
