//! Model-based standardization of free-text reports.

use clinorm_core::{Language, Terminology};

use crate::batch::batch_map;
use crate::client::{ChatBackend, LlmError};
use crate::prompt::{build_prompt_with, Exemplar, PromptTemplate, ShotMode};

/// Completions are folded onto one line so they fit hypothesis files.
pub fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub struct LlmStandardizer<'a, B: ChatBackend + ?Sized> {
    pub backend: &'a B,
    pub terminology: &'a Terminology,
    pub template: PromptTemplate,
    pub exemplars: Vec<Exemplar>,
    pub mode: ShotMode,
    pub lang: Language,
}

impl<B: ChatBackend + ?Sized> LlmStandardizer<'_, B> {
    pub fn standardize(&self, report: &str) -> Result<String, LlmError> {
        let p = build_prompt_with(
            &self.template,
            report,
            &self.exemplars,
            self.terminology,
            self.lang,
            self.mode,
        )?;
        let out = one_line(&self.backend.complete(&p.system, &p.user)?);
        if out.is_empty() {
            return Err(LlmError::EmptyCompletion);
        }
        Ok(out)
    }
}

/// Standardize every report with the default template; results keep input
/// order and at most `parallelism` requests are in flight.
pub fn standardize_llm<B: ChatBackend + ?Sized>(
    reports: &[String],
    backend: &B,
    t: &Terminology,
    exemplars: &[Exemplar],
    lang: Language,
    mode: ShotMode,
    parallelism: usize,
) -> Vec<Result<String, LlmError>> {
    let s = LlmStandardizer {
        backend,
        terminology: t,
        template: PromptTemplate::default_for(lang),
        exemplars: exemplars.to_vec(),
        mode,
        lang,
    };
    batch_map(reports, parallelism, |r| s.standardize(r))
}
