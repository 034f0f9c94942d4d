//! Chinese to English translation of report pairs with a terminology
//! consistency check on the standard side.

use std::collections::BTreeSet;

use clinorm_core::{match_terms, Language, ReportPair, Terminology};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::batch::batch_map;
use crate::client::{ChatBackend, LlmError};
use crate::standardize::one_line;

pub const TRANSLATE_SYSTEM: &str = "Translate the Chinese ophthalmic fundus report \
into English. Keep the eye abbreviations (OD, OS, OU), the order of findings and the \
punctuation pattern, using \"; \" between findings and a final period. Output only the \
translation, on one line.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "flag")]
pub enum ConsistencyFlag {
    MissingTerm { term_id: String, en: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationOutcome {
    pub pair: ReportPair,
    pub flags: Vec<ConsistencyFlag>,
    pub repaired: bool,
}

/// Term ids of the Chinese text whose English counterpart does not occur in
/// the translation.
fn missing_terms(zh: &str, en: &str, t: &Terminology) -> Vec<String> {
    let found: BTreeSet<String> = match_terms(en, t).into_iter().map(|m| m.term_id).collect();
    let mut seen = BTreeSet::new();
    match_terms(zh, t)
        .into_iter()
        .map(|m| m.term_id)
        .filter(|id| !found.contains(id) && seen.insert(id.clone()))
        .collect()
}

fn repair_system(required: &[&str]) -> String {
    format!(
        "{TRANSLATE_SYSTEM}\nThe translation must use these exact English terms: {}.",
        required.join("; ")
    )
}

fn translate(backend: &(impl ChatBackend + ?Sized), system: &str, text: &str) -> Result<String, LlmError> {
    let out = one_line(&backend.complete(system, text)?);
    if out.is_empty() {
        return Err(LlmError::EmptyCompletion);
    }
    Ok(out)
}

/// Translate both sides of a Chinese pair. When the English standard misses a
/// term found in the Chinese standard, one repair request names the required
/// canonical English terms; terms still missing afterwards are flagged.
pub fn translate_with_consistency<B: ChatBackend + ?Sized>(
    pair: &ReportPair,
    backend: &B,
    t: &Terminology,
) -> Result<TranslationOutcome, LlmError> {
    if pair.lang != Language::Zh {
        return Err(LlmError::Prompt(format!("pair {} is not Chinese", pair.id)));
    }
    let original = translate(backend, TRANSLATE_SYSTEM, &pair.original)?;
    let mut standard = translate(backend, TRANSLATE_SYSTEM, &pair.standard)?;
    let mut missing = missing_terms(&pair.standard, &standard, t);
    let mut repaired = false;
    if !missing.is_empty() {
        let required: Vec<&str> = missing
            .iter()
            .filter_map(|id| t.get(id))
            .map(|e| e.en.as_str())
            .collect();
        standard = translate(backend, &repair_system(&required), &pair.standard)?;
        repaired = true;
        missing = missing_terms(&pair.standard, &standard, t);
    }
    let flags: Vec<ConsistencyFlag> = missing
        .into_iter()
        .map(|id| ConsistencyFlag::MissingTerm {
            en: t.get(&id).map(|e| e.en.clone()).unwrap_or_default(),
            term_id: id,
        })
        .collect();
    if !flags.is_empty() {
        warn!("pair {}: {} term(s) missing after repair", pair.id, flags.len());
    }
    let pair = ReportPair::new(format!("{}#en", pair.id), Language::En, original, standard)
        .map_err(|e| LlmError::Output(e.to_string()))?;
    Ok(TranslationOutcome { pair, flags, repaired })
}

pub fn translate_pairs<B: ChatBackend + ?Sized>(
    pairs: &[ReportPair],
    backend: &B,
    t: &Terminology,
    parallelism: usize,
) -> Vec<Result<TranslationOutcome, LlmError>> {
    batch_map(pairs, parallelism, |p| translate_with_consistency(p, backend, t))
}
