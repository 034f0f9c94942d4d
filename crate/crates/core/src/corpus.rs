//! Reports, report pairs and JSONL corpora.
//!
//! A corpus file holds one JSON object per line with the fields `id`,
//! `lang` (`"zh"` or `"en"`), `original` and `standard`. Extra fields are
//! ignored on read; records are written back with that fixed field order.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::text::is_cjk;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Zh,
    En,
}

impl Language {
    pub const ALL: [Language; 2] = [Language::Zh, Language::En];

    pub fn tag(self) -> &'static str {
        match self {
            Language::Zh => "zh",
            Language::En => "en",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Language {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zh" => Ok(Language::Zh),
            "en" => Ok(Language::En),
            other => Err(CorpusError::UnknownLanguage(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown language tag {0:?}")]
    UnknownLanguage(String),
    #[error("field `{0}` is empty")]
    EmptyField(&'static str),
    #[error("field `{0}` is missing or not a string")]
    MissingField(&'static str),
    #[error("field `{0}` contains a line break")]
    EmbeddedNewline(&'static str),
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<CorpusError>,
    },
    #[error("duplicate id {0:?} on lines {1} and {2}")]
    DuplicateId(String, usize, usize),
    #[error("cannot detect language of empty text")]
    EmptyText,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    fn at(self, line: usize) -> Self {
        CorpusError::AtLine {
            line,
            source: Box::new(self),
        }
    }

    /// The innermost error, unwrapping line context.
    pub fn root(&self) -> &CorpusError {
        match self {
            CorpusError::AtLine { source, .. } => source.root(),
            other => other,
        }
    }
}

/// A single report text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub id: String,
    pub lang: Language,
    pub text: String,
}

/// An (original report, standard report) supervision pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportPair {
    pub id: String,
    pub lang: Language,
    pub original: String,
    pub standard: String,
}

impl ReportPair {
    pub fn new(
        id: impl Into<String>,
        lang: Language,
        original: impl Into<String>,
        standard: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let pair = Self {
            id: id.into(),
            lang,
            original: original.into(),
            standard: standard.into(),
        };
        pair.check()?;
        Ok(pair)
    }

    fn check(&self) -> Result<(), CorpusError> {
        for (name, value) in [
            ("id", &self.id),
            ("original", &self.original),
            ("standard", &self.standard),
        ] {
            if value.trim().is_empty() {
                return Err(CorpusError::EmptyField(name));
            }
            if value.contains(['\n', '\r']) {
                return Err(CorpusError::EmbeddedNewline(name));
            }
        }
        Ok(())
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("pair serializes")
    }
}

/// Parse one JSONL record into a pair.
pub fn parse_pair_record(line: &str) -> Result<ReportPair, CorpusError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| CorpusError::Malformed(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CorpusError::Malformed("record is not a JSON object".into()))?;
    let field = |name: &'static str| -> Result<String, CorpusError> {
        obj.get(name)
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or(CorpusError::MissingField(name))
    };
    let id = field("id")?;
    let lang: Language = field("lang")?.parse()?;
    let original = field("original")?;
    let standard = field("standard")?;
    ReportPair::new(id, lang, original, standard)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub pairs: Vec<ReportPair>,
}

impl Corpus {
    /// Build a corpus, rejecting duplicate ids (reported with 1-based positions).
    pub fn new(pairs: Vec<ReportPair>) -> Result<Self, CorpusError> {
        let mut seen: HashMap<&str, usize> = HashMap::with_capacity(pairs.len());
        for (i, p) in pairs.iter().enumerate() {
            if let Some(first) = seen.insert(p.id.as_str(), i + 1) {
                return Err(CorpusError::DuplicateId(p.id.clone(), first, i + 1));
            }
        }
        Ok(Self { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ReportPair> {
        self.pairs.iter()
    }

    pub fn by_language(&self, lang: Language) -> Corpus {
        Corpus {
            pairs: self.pairs.iter().filter(|p| p.lang == lang).cloned().collect(),
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.pairs {
            out.push_str(&p.to_json_line());
            out.push('\n');
        }
        out
    }
}

/// Parse JSONL text. Blank lines are skipped; any malformed record aborts.
pub fn parse_corpus(text: &str) -> Result<Corpus, CorpusError> {
    let mut pairs = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let pair = parse_pair_record(line).map_err(|e| e.at(line_no))?;
        if let Some(&first) = seen.get(&pair.id) {
            return Err(CorpusError::DuplicateId(pair.id, first, line_no));
        }
        seen.insert(pair.id.clone(), line_no);
        pairs.push(pair);
    }
    Ok(Corpus { pairs })
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_corpus(&text)
}

pub fn write_corpus(path: impl AsRef<Path>, corpus: &Corpus) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    for p in &corpus.pairs {
        writeln!(w, "{}", p.to_json_line()).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// `zh` when CJK ideographs make up more than this share of letter-like codepoints.
pub const CJK_THRESHOLD: f64 = 0.3;

pub fn detect_language(text: &str) -> Result<Language, CorpusError> {
    if text.trim().is_empty() {
        return Err(CorpusError::EmptyText);
    }
    let (mut cjk, mut letters) = (0usize, 0usize);
    for c in text.chars() {
        if is_cjk(c) {
            cjk += 1;
            letters += 1;
        } else if c.is_alphabetic() {
            letters += 1;
        }
    }
    if letters > 0 && cjk as f64 / letters as f64 > CJK_THRESHOLD {
        Ok(Language::Zh)
    } else {
        Ok(Language::En)
    }
}
