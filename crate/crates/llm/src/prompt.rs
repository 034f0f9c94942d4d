//! Prompt templates and few-shot prompt construction.
//!
//! A template file holds the system message, a line containing only `---`,
//! then the user message. Placeholders `{terminology_excerpt}`, `{exemplars}`
//! and `{report}` are substituted in a single pass, so text inserted for one
//! placeholder is never rescanned.

use std::fs;
use std::path::Path;

use clinorm_core::{Language, Terminology};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::client::LlmError;

pub const EXPECTED_SHOTS: usize = 5;

const PLACEHOLDERS: [&str; 3] = ["terminology_excerpt", "exemplars", "report"];

const SYSTEM_EN: &str = "You standardize ophthalmic fundus diagnostic reports. \
Rewrite the report with the standard terminology below. Put the eye (OD, OS or OU) \
before each finding, use one canonical term per finding, write absent findings as \
\"no <term>\", separate findings with \"; \" and end with a period. \
Reply in English with the standardized report only, on one line.

Standard terminology:
{terminology_excerpt}";

const SYSTEM_ZH: &str = "你负责将眼底诊断报告标准化。请使用下列标准术语改写报告：\
每条所见前注明眼别（OD、OS或OU），每条所见使用一个标准术语，阴性所见写作“无<术语>”，\
所见之间用“；”分隔，以“。”结尾。请用中文回答，只输出一行标准化报告。

标准术语：
{terminology_excerpt}";

const USER: &str = "{exemplars}Original: {report}\nStandard:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShotMode {
    Zero,
    Few,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub original: String,
    pub standard: String,
}

impl Exemplar {
    pub fn new(original: impl Into<String>, standard: impl Into<String>) -> Result<Self, LlmError> {
        let e = Self {
            original: original.into(),
            standard: standard.into(),
        };
        e.check()?;
        Ok(e)
    }

    fn check(&self) -> Result<(), LlmError> {
        if self.original.trim().is_empty() || self.standard.trim().is_empty() {
            return Err(LlmError::Prompt("exemplar sides must be nonempty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub system: String,
    pub user: String,
}

impl PromptTemplate {
    pub fn default_for(lang: Language) -> Self {
        Self {
            system: match lang {
                Language::En => SYSTEM_EN,
                Language::Zh => SYSTEM_ZH,
            }
            .to_string(),
            user: USER.to_string(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, LlmError> {
        let text = text.replace("\r\n", "\n");
        let mut system = Vec::new();
        let mut user = Vec::new();
        let mut split = false;
        for line in text.split('\n') {
            if !split && line.trim() == "---" {
                split = true;
            } else if split {
                user.push(line);
            } else {
                system.push(line);
            }
        }
        if !split {
            return Err(LlmError::Prompt("template has no `---` separator line".into()));
        }
        let user = user.join("\n").trim_end().to_string();
        if !user.contains("{report}") {
            return Err(LlmError::Prompt("user part must contain {report}".into()));
        }
        Ok(Self {
            system: system.join("\n").trim_end().to_string(),
            user,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| LlmError::Prompt(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn render(&self, excerpt: &str, exemplars: &str, report: &str) -> Prompt {
        let values = [excerpt, exemplars, report];
        Prompt {
            system: substitute(&self.system, &values),
            user: substitute(&self.user, &values),
        }
    }
}

fn substitute(template: &str, values: &[&str; 3]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while let Some(i) = rest.find('{') {
        out.push_str(&rest[..i]);
        let tail = &rest[i + 1..];
        for (name, value) in PLACEHOLDERS.iter().zip(values) {
            if let Some(after) = tail.strip_prefix(name).and_then(|t| t.strip_prefix('}')) {
                out.push_str(value);
                rest = after;
                continue 'outer;
            }
        }
        out.push('{');
        rest = tail;
    }
    out.push_str(rest);
    out
}

/// Canonical surfaces for `lang`, one per line.
pub fn terminology_excerpt(t: &Terminology, lang: Language) -> String {
    t.canonical_surfaces(lang).collect::<Vec<_>>().join("\n")
}

pub fn exemplar_block(exemplars: &[Exemplar]) -> String {
    exemplars
        .iter()
        .map(|e| format!("Original: {}\nStandard: {}\n\n", e.original, e.standard))
        .collect()
}

pub fn build_fewshot_prompt(
    report: &str,
    exemplars: &[Exemplar],
    t: &Terminology,
    lang: Language,
    mode: ShotMode,
) -> Result<Prompt, LlmError> {
    build_prompt_with(&PromptTemplate::default_for(lang), report, exemplars, t, lang, mode)
}

pub fn build_prompt_with(
    template: &PromptTemplate,
    report: &str,
    exemplars: &[Exemplar],
    t: &Terminology,
    lang: Language,
    mode: ShotMode,
) -> Result<Prompt, LlmError> {
    let shots = match mode {
        ShotMode::Zero => &[][..],
        ShotMode::Few => {
            if exemplars.is_empty() {
                return Err(LlmError::Prompt("few-shot mode needs at least one exemplar".into()));
            }
            for e in exemplars {
                e.check()?;
            }
            if exemplars.len() != EXPECTED_SHOTS {
                warn!("few-shot prompt with {} exemplars (expected {EXPECTED_SHOTS})", exemplars.len());
            }
            exemplars
        }
    };
    Ok(template.render(&terminology_excerpt(t, lang), &exemplar_block(shots), report))
}
