//! Seeded data augmentation: syntactic noise, semantic perturbation and
//! synonym replacement.
//!
//! Every stochastic decision draws from an explicit [`Xorshift64Star`]
//! stream, so outputs depend only on the inputs and the seed. Corpus
//! augmentation derives one stream per variant from `(seed, variant index)`
//! and produces the same corpus whether variants are built in parallel or not.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, Language, ReportPair};
use crate::rng::Xorshift64Star;
use crate::terminology::{clause_start, match_terms, Polarity, TermMatch, Terminology};
use crate::text::{fold_char, is_decimal_point, is_noise_punct};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("rate {name} = {value} is outside [0, 1]")]
    InvalidRate { name: &'static str, value: f64 },
    #[error("target size {target} is smaller than the corpus ({size} pairs)")]
    TargetTooSmall { target: usize, size: usize },
    #[error("cannot grow an empty corpus")]
    EmptySource,
    #[error("confusion table maps {0:?} to itself")]
    SelfConfusion(char),
    #[error("confusion table line {line}: {message}")]
    TableLine { line: usize, message: String },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub seed: u64,
    pub typo_rate: f64,
    pub punct_delete_rate: f64,
    pub split_rate: f64,
    pub negation_rate: f64,
    pub modifier_rate: f64,
    pub synonym_rate: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            typo_rate: 0.01,
            punct_delete_rate: 0.2,
            split_rate: 0.2,
            negation_rate: 0.15,
            modifier_rate: 0.15,
            synonym_rate: 0.5,
        }
    }
}

impl AugmentConfig {
    /// All rates zero: every technique becomes the identity.
    pub fn zero(seed: u64) -> Self {
        Self {
            seed,
            typo_rate: 0.0,
            punct_delete_rate: 0.0,
            split_rate: 0.0,
            negation_rate: 0.0,
            modifier_rate: 0.0,
            synonym_rate: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        for (name, value) in [
            ("typo_rate", self.typo_rate),
            ("punct_delete_rate", self.punct_delete_rate),
            ("split_rate", self.split_rate),
            ("negation_rate", self.negation_rate),
            ("modifier_rate", self.modifier_rate),
            ("synonym_rate", self.synonym_rate),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(AugmentError::InvalidRate { name, value });
            }
        }
        Ok(())
    }

    /// Read a TOML or JSON config (chosen by extension, TOML otherwise).
    pub fn load(path: impl AsRef<Path>) -> Result<Self, AugmentError> {
        let path = path.as_ref();
        let err = |message: String| AugmentError::Config {
            path: path.to_path_buf(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let cfg: Self = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| err(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| err(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Character confusions used for typo simulation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionTable {
    map: BTreeMap<char, Vec<char>>,
}

impl ConfusionTable {
    pub fn new(map: BTreeMap<char, Vec<char>>) -> Result<Self, AugmentError> {
        for (&c, reps) in &map {
            if reps.contains(&c) {
                return Err(AugmentError::SelfConfusion(c));
            }
        }
        Ok(Self {
            map: map.into_iter().filter(|(_, r)| !r.is_empty()).collect(),
        })
    }

    /// Two-column TSV: a character and its `|`-separated replacements.
    /// A leading `char` header row is optional.
    pub fn from_tsv(text: &str) -> Result<Self, AugmentError> {
        let mut map: BTreeMap<char, Vec<char>> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_err = |message: &str| AugmentError::TableLine {
                line: idx + 1,
                message: message.to_string(),
            };
            if line.trim().is_empty() || (idx == 0 && line.starts_with("char\t")) {
                continue;
            }
            let (key, reps) = line
                .split_once('\t')
                .ok_or_else(|| line_err("expected two tab-separated columns"))?;
            let mut chars = key.chars();
            let c = match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => return Err(line_err("first column must be one character")),
            };
            let slot = map.entry(c).or_default();
            for r in reps.split('|').map(str::trim).filter(|r| !r.is_empty()) {
                let mut rc = r.chars();
                match (rc.next(), rc.next()) {
                    (Some(x), None) if !slot.contains(&x) => slot.push(x),
                    (Some(_), None) => {}
                    _ => return Err(line_err("replacements must be single characters")),
                }
            }
        }
        Self::new(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AugmentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| AugmentError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_tsv(&text)
    }

    pub fn get(&self, c: char) -> Option<&[char]> {
        self.map.get(&c).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Bundled shape/pinyin confusables for Chinese.
    pub fn default_zh() -> Self {
        Self::from_tsv(include_str!("../data/confusion_zh.tsv")).expect("bundled zh table")
    }

    /// Bundled adjacent-key map for English.
    pub fn default_en() -> Self {
        Self::from_tsv(include_str!("../data/confusion_en.tsv")).expect("bundled en table")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionTables {
    pub zh: ConfusionTable,
    pub en: ConfusionTable,
}

impl Default for ConfusionTables {
    fn default() -> Self {
        Self {
            zh: ConfusionTable::default_zh(),
            en: ConfusionTable::default_en(),
        }
    }
}

impl ConfusionTables {
    pub fn for_lang(&self, lang: Language) -> &ConfusionTable {
        match lang {
            Language::Zh => &self.zh,
            Language::En => &self.en,
        }
    }
}

fn is_split_point(c: char) -> bool {
    matches!(c, ',' | ';' | '，' | '；')
}

fn sentence_stop(c: char) -> char {
    if c.is_ascii() {
        '.'
    } else {
        '。'
    }
}

/// Typos, punctuation deletion and sentence splitting.
///
/// Characters found in `table` (case-insensitively, case preserved) are
/// replaced with probability `typo_rate`; other characters are never
/// touched. Clause boundaries (`,;，；`) first try a sentence split, then
/// deletion; other punctuation can only be deleted. Decimal points are not
/// punctuation here.
pub fn inject_syntactic_noise(
    text: &str,
    cfg: &AugmentConfig,
    table: &ConfusionTable,
    rng: &mut Xorshift64Star,
) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    for (i, &c) in chars.iter().enumerate() {
        if is_noise_punct(c) && !is_decimal_point(&chars, i) {
            if is_split_point(c) && rng.chance(cfg.split_rate) {
                out.push(sentence_stop(c));
                continue;
            }
            if !rng.chance(cfg.punct_delete_rate) {
                out.push(c);
            }
            continue;
        }
        let folded = fold_char(c);
        match table.get(folded) {
            Some(reps) => {
                if rng.chance(cfg.typo_rate) {
                    let r = *rng.pick(reps);
                    if c != folded {
                        out.extend(r.to_uppercase());
                    } else {
                        out.push(r);
                    }
                } else {
                    out.push(c);
                }
            }
            None => out.push(c),
        }
    }
    out
}

const MODIFIERS_ZH: [&str; 2] = ["可能", "考虑"];
const MODIFIERS_EN: [&str; 2] = ["possible ", "suspected "];

fn insert_all(text: &str, mut inserts: Vec<(usize, String)>) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    inserts.sort_by_key(|x| std::cmp::Reverse(x.0));
    for (pos, s) in inserts {
        chars.splice(pos..pos, s.chars());
    }
    chars.into_iter().collect()
}

/// No later match shares this match's clause, so a cue placed before it
/// cannot reach another mention.
fn last_in_clause(text_chars: &[char], matches: &[TermMatch], k: usize) -> bool {
    let from = clause_start(text_chars, matches[k].start);
    matches[k + 1..]
        .iter()
        .all(|m| clause_start(text_chars, m.start) != from)
}

/// Negation flips and probabilistic modifiers, label-consistent.
///
/// For each term mention in `original`: with probability `negation_rate`
/// an asserted mention gains a negation cue and the first unused asserted
/// mention of the same term in `standard` gains the rendered negation, so
/// the pair stays consistent. Mentions that would drag another mention of
/// their clause along, or that have no counterpart in `standard`, are not
/// negated. Otherwise, with probability `modifier_rate`, a hedge word is
/// inserted before the mention in `original` only.
pub fn perturb_semantics(
    pair: &ReportPair,
    t: &Terminology,
    cfg: &AugmentConfig,
    rng: &mut Xorshift64Star,
) -> ReportPair {
    let matches = match_terms(&pair.original, t);
    if matches.is_empty() {
        return pair.clone();
    }
    let orig_chars: Vec<char> = pair.original.chars().map(fold_char).collect();
    let std_chars: Vec<char> = pair.standard.chars().map(fold_char).collect();
    let std_matches = match_terms(&pair.standard, t);
    let mut used = vec![false; std_matches.len()];
    let (cue_orig, cue_std, modifiers) = match pair.lang {
        Language::Zh => ("未见", "无", &MODIFIERS_ZH),
        Language::En => ("no ", "no ", &MODIFIERS_EN),
    };
    let mut orig_inserts = Vec::new();
    let mut std_inserts = Vec::new();
    for (k, m) in matches.iter().enumerate() {
        let negate = rng.chance(cfg.negation_rate);
        let hedge = rng.chance(cfg.modifier_rate);
        let which = rng.below(modifiers.len());
        if negate && m.polarity == Polarity::Asserted && last_in_clause(&orig_chars, &matches, k) {
            let target = (0..std_matches.len()).find(|&j| {
                !used[j]
                    && std_matches[j].term_id == m.term_id
                    && std_matches[j].polarity == Polarity::Asserted
                    && last_in_clause(&std_chars, &std_matches, j)
            });
            if let Some(j) = target {
                used[j] = true;
                orig_inserts.push((m.start, cue_orig.to_string()));
                std_inserts.push((std_matches[j].start, cue_std.to_string()));
                continue;
            }
        }
        if hedge {
            orig_inserts.push((m.start, modifiers[which].to_string()));
        }
    }
    ReportPair {
        id: pair.id.clone(),
        lang: pair.lang,
        original: insert_all(&pair.original, orig_inserts),
        standard: insert_all(&pair.standard, std_inserts),
    }
}

/// Replace canonical term mentions by a synonym of the same entry and
/// language with probability `synonym_rate` each.
pub fn replace_synonyms(
    text: &str,
    t: &Terminology,
    cfg: &AugmentConfig,
    rng: &mut Xorshift64Star,
) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    let mut replacements = Vec::new();
    for m in match_terms(text, t) {
        let hit = rng.chance(cfg.synonym_rate);
        if !hit || !m.canonical {
            continue;
        }
        let entry = t.get(&m.term_id).expect("matched term exists");
        let synonyms: Vec<&String> = entry.synonyms(m.surface_lang).iter().collect();
        if synonyms.is_empty() {
            continue;
        }
        replacements.push((m.start, m.end, rng.pick(&synonyms).to_string()));
    }
    for (start, end, s) in replacements.into_iter().rev() {
        chars.splice(start..end, s.chars());
    }
    chars.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Technique {
    Syntactic,
    Semantic,
    Synonym,
}

impl Technique {
    pub const ROTATION: [Technique; 3] = [Technique::Syntactic, Technique::Semantic, Technique::Synonym];

    /// Technique of variant `k` over a source of `n` pairs: each source pair
    /// cycles through the rotation across rounds.
    pub fn for_variant(k: usize, n: usize) -> Self {
        Self::ROTATION[(k / n + k % n) % 3]
    }
}

/// Build variant `k` (0-based) of a corpus of `sources`.
pub fn make_variant(
    sources: &[ReportPair],
    k: usize,
    t: &Terminology,
    cfg: &AugmentConfig,
    tables: &ConfusionTables,
) -> ReportPair {
    let n = sources.len();
    let src = &sources[k % n];
    let mut rng = Xorshift64Star::derive(cfg.seed, k as u64);
    let mut out = match Technique::for_variant(k, n) {
        Technique::Syntactic => ReportPair {
            original: inject_syntactic_noise(&src.original, cfg, tables.for_lang(src.lang), &mut rng),
            ..src.clone()
        },
        Technique::Semantic => perturb_semantics(src, t, cfg, &mut rng),
        Technique::Synonym => ReportPair {
            original: replace_synonyms(&src.original, t, cfg, &mut rng),
            ..src.clone()
        },
    };
    if out.original.trim().is_empty() {
        out.original = src.original.clone();
    }
    out.id = format!("{}#aug{}", src.id, k / n + 1);
    out
}

/// Grow `corpus` to `target_size` pairs: the sources verbatim, then
/// variants `<id>#aug<round>` cycling over the sources.
pub fn augment_corpus(
    corpus: &Corpus,
    t: &Terminology,
    cfg: &AugmentConfig,
    tables: &ConfusionTables,
    target_size: usize,
) -> Result<Corpus, AugmentError> {
    cfg.validate()?;
    let n = corpus.len();
    if target_size < n {
        return Err(AugmentError::TargetTooSmall {
            target: target_size,
            size: n,
        });
    }
    if n == 0 && target_size > 0 {
        return Err(AugmentError::EmptySource);
    }
    let variants: Vec<ReportPair> = (0..target_size - n)
        .into_par_iter()
        .map(|k| make_variant(&corpus.pairs, k, t, cfg, tables))
        .collect();
    let mut pairs = corpus.pairs.clone();
    pairs.extend(variants);
    Ok(Corpus::new(pairs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terminology::reference_terminology;

    fn rng() -> Xorshift64Star {
        Xorshift64Star::new(7)
    }

    #[test]
    fn zero_rates_are_identity() {
        let cfg = AugmentConfig::zero(1);
        let t = reference_terminology();
        let tables = ConfusionTables::default();
        let text = "右眼视盘界清，黄斑水肿；左眼玻璃体混浊。C/D 0.4";
        assert_eq!(inject_syntactic_noise(text, &cfg, &tables.zh, &mut rng()), text);
        assert_eq!(replace_synonyms(text, &t, &cfg, &mut rng()), text);
        let p = ReportPair::new("a", Language::Zh, text, "OD：视盘界清；OD：黄斑水肿；OS：玻璃体混浊。").unwrap();
        assert_eq!(perturb_semantics(&p, &t, &cfg, &mut rng()), p);
    }

    #[test]
    fn full_typo_rate() {
        let mut map = BTreeMap::new();
        map.insert('a', vec!['x']);
        let table = ConfusionTable::new(map).unwrap();
        let cfg = AugmentConfig {
            typo_rate: 1.0,
            ..AugmentConfig::zero(0)
        };
        assert_eq!(inject_syntactic_noise("aaa", &cfg, &table, &mut rng()), "xxx");
        assert_eq!(inject_syntactic_noise("aAb", &cfg, &table, &mut rng()), "xXb");
    }

    #[test]
    fn split_and_delete() {
        let table = ConfusionTable::default();
        let split = AugmentConfig {
            split_rate: 1.0,
            ..AugmentConfig::zero(0)
        };
        assert_eq!(
            inject_syntactic_noise("a, b; c. 0.4，d", &split, &table, &mut rng()),
            "a. b. c. 0.4。d"
        );
        let delete = AugmentConfig {
            punct_delete_rate: 1.0,
            ..AugmentConfig::zero(0)
        };
        assert_eq!(
            inject_syntactic_noise("OD: a, b. C/D 0.4。", &delete, &table, &mut rng()),
            "OD a b C/D 0.4"
        );
    }

    #[test]
    fn noise_is_deterministic() {
        let cfg = AugmentConfig {
            typo_rate: 0.3,
            ..AugmentConfig::default()
        };
        let table = ConfusionTable::default_en();
        let text = "optic disc margin clear, no retinal hemorrhage; macular edema.";
        let a = inject_syntactic_noise(text, &cfg, &table, &mut Xorshift64Star::new(5));
        let b = inject_syntactic_noise(text, &cfg, &table, &mut Xorshift64Star::new(5));
        assert_eq!(a, b);
        assert_ne!(a, text);
    }

    #[test]
    fn self_confusion_rejected() {
        assert!(matches!(
            ConfusionTable::from_tsv("a\tb|a"),
            Err(AugmentError::SelfConfusion('a'))
        ));
        assert!(ConfusionTable::from_tsv("ab\tc").is_err());
        let t = ConfusionTable::default_zh();
        assert!(t.get('视').is_some());
        assert_eq!(ConfusionTable::default_en().len(), 26);
    }

    #[test]
    fn negation_keeps_labels_consistent() {
        let t = reference_terminology();
        let cfg = AugmentConfig {
            negation_rate: 1.0,
            ..AugmentConfig::zero(0)
        };
        let p = ReportPair::new("a", Language::En, "od vitreous opacity", "OD: vitreous opacity.").unwrap();
        let out = perturb_semantics(&p, &t, &cfg, &mut rng());
        assert_eq!(out.original, "od no vitreous opacity");
        assert_eq!(out.standard, "OD: no vitreous opacity.");
        let m = match_terms(&out.standard, &t);
        assert_eq!(m[0].polarity, Polarity::Negated);

        let p = ReportPair::new("b", Language::Zh, "右眼玻璃体混浊", "OD：玻璃体混浊。").unwrap();
        let out = perturb_semantics(&p, &t, &cfg, &mut rng());
        assert_eq!(out.original, "右眼未见玻璃体混浊");
        assert_eq!(out.standard, "OD：无玻璃体混浊。");
    }

    #[test]
    fn negation_skips_shared_clause() {
        let t = reference_terminology();
        let cfg = AugmentConfig {
            negation_rate: 1.0,
            ..AugmentConfig::zero(0)
        };
        let p = ReportPair::new(
            "a",
            Language::En,
            "drusen and vitreous opacity",
            "drusen; vitreous opacity.",
        )
        .unwrap();
        let out = perturb_semantics(&p, &t, &cfg, &mut rng());
        assert_eq!(out.original, "drusen and no vitreous opacity");
        assert_eq!(out.standard, "drusen; no vitreous opacity.");
    }

    #[test]
    fn modifiers_only_touch_original() {
        let t = reference_terminology();
        let cfg = AugmentConfig {
            modifier_rate: 1.0,
            ..AugmentConfig::zero(0)
        };
        let p = ReportPair::new("a", Language::En, "drusen, macular edema", "drusen; macular edema.").unwrap();
        let out = perturb_semantics(&p, &t, &cfg, &mut rng());
        assert_eq!(out.standard, p.standard);
        let m = match_terms(&out.original, &t);
        assert_eq!(m.len(), 2);
        let chars: Vec<char> = out.original.chars().collect();
        for mm in m {
            let before: String = chars[..mm.start].iter().collect();
            assert!(before.ends_with("possible ") || before.ends_with("suspected "), "{}", out.original);
        }
    }

    #[test]
    fn synonyms() {
        let t = reference_terminology();
        let cfg = AugmentConfig {
            synonym_rate: 1.0,
            ..AugmentConfig::zero(0)
        };
        // T013 has one synonym per language
        assert_eq!(
            replace_synonyms("vitreous opacity and vitreous opacity", &t, &cfg, &mut rng()),
            "vitreous opacities and vitreous opacities"
        );
        assert_eq!(replace_synonyms("玻璃体混浊", &t, &cfg, &mut rng()), "玻璃体浑浊");
        // T005 glaucoma has no synonyms
        assert_eq!(replace_synonyms("glaucoma", &t, &cfg, &mut rng()), "glaucoma");
        assert_eq!(replace_synonyms("nothing here", &t, &cfg, &mut rng()), "nothing here");
        // already a synonym: untouched
        assert_eq!(replace_synonyms("vitreous opacities", &t, &cfg, &mut rng()), "vitreous opacities");
    }

    fn small_corpus() -> Corpus {
        Corpus::new(vec![
            ReportPair::new("p1", Language::En, "od vitreous opacity, drusen", "OD: vitreous opacity; OD: drusen.").unwrap(),
            ReportPair::new("p2", Language::Zh, "左眼黄斑水肿，视盘界清", "OS：黄斑水肿；OS：视盘界清。").unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn corpus_growth() {
        let t = reference_terminology();
        let tables = ConfusionTables::default();
        let cfg = AugmentConfig::default();
        let c = small_corpus();
        assert_eq!(augment_corpus(&c, &t, &cfg, &tables, 2).unwrap(), c);
        let out = augment_corpus(&c, &t, &cfg, &tables, 9).unwrap();
        assert_eq!(out.len(), 9);
        assert_eq!(&out.pairs[..2], &c.pairs[..]);
        let ids: Vec<_> = out.iter().skip(2).map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["p1#aug1", "p2#aug1", "p1#aug2", "p2#aug2", "p1#aug3", "p2#aug3", "p1#aug4"]);
        assert_eq!(out, augment_corpus(&c, &t, &cfg, &tables, 9).unwrap());
        assert!(matches!(
            augment_corpus(&c, &t, &cfg, &tables, 1),
            Err(AugmentError::TargetTooSmall { target: 1, size: 2 })
        ));
        assert!(matches!(
            augment_corpus(&Corpus::default(), &t, &cfg, &tables, 3),
            Err(AugmentError::EmptySource)
        ));
    }

    #[test]
    fn parallel_equals_serial() {
        let t = reference_terminology();
        let tables = ConfusionTables::default();
        let cfg = AugmentConfig::default();
        let c = small_corpus();
        let par = augment_corpus(&c, &t, &cfg, &tables, 40).unwrap();
        let serial: Vec<ReportPair> = (0..38).map(|k| make_variant(&c.pairs, k, &t, &cfg, &tables)).collect();
        assert_eq!(&par.pairs[2..], &serial[..]);
    }

    #[test]
    fn rotation_visits_all_techniques_per_source() {
        for n in [1, 2, 3, 6] {
            for src in 0..n {
                let seen: Vec<Technique> = (0..3).map(|round| Technique::for_variant(round * n + src, n)).collect();
                for t in Technique::ROTATION {
                    assert!(seen.contains(&t), "n={n} src={src}");
                }
            }
        }
    }

    #[test]
    fn invalid_rates() {
        let cfg = AugmentConfig {
            typo_rate: 1.5,
            ..AugmentConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(AugmentError::InvalidRate { name: "typo_rate", .. })));
    }
}
