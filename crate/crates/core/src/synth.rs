//! Seeded synthetic fundus reports: structured findings, their canonical
//! rendering, and a noisier free-text original that reads back to the same
//! findings.

use crate::corpus::{parse_corpus, Corpus, Language, ReportPair};
use crate::rng::Xorshift64Star;
use crate::standardize::{render_standard_report, Finding, Laterality, StandardReport};
use crate::terminology::{Category, Polarity, Terminology};

const GROUPS: [Laterality; 4] = [Laterality::Unspecified, Laterality::Od, Laterality::Os, Laterality::Ou];

const ZH_FILLER: [&str; 4] = ["眼底检查示", "散瞳后查", "C/D 0.3", "C/D约0.5"];
const EN_FILLER: [&str; 4] = ["fundus examination", "dilated exam", "C/D 0.3", "C/D about 0.5"];

/// Seed of the bundled corpus (25 pairs per language).
pub const BUNDLED_SEED: u64 = 2024;
pub const BUNDLED_PER_LANG: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub max_findings: usize,
    pub negation_rate: f64,
    pub synonym_rate: f64,
    pub filler_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            max_findings: 4,
            negation_rate: 0.3,
            synonym_rate: 0.4,
            filler_rate: 0.3,
        }
    }
}

/// Findings grouped by laterality (unspecified, OD, OS, OU), each
/// (laterality, term) at most once. Descriptive terms are never negated.
pub fn synth_report(t: &Terminology, lang: Language, cfg: &SynthConfig, rng: &mut Xorshift64Star) -> StandardReport {
    let n = 1 + rng.below(cfg.max_findings.max(1));
    let mut picked: Vec<(usize, usize, Polarity)> = Vec::with_capacity(n);
    while picked.len() < n {
        let g = rng.below(GROUPS.len());
        let e = rng.below(t.size());
        if picked.iter().any(|&(pg, pe, _)| pg == g && pe == e) {
            continue;
        }
        let negated = t.entries()[e].category != Category::Descriptive && rng.chance(cfg.negation_rate);
        let pol = if negated { Polarity::Negated } else { Polarity::Asserted };
        picked.push((g, e, pol));
    }
    picked.sort_by_key(|&(g, _, _)| g);
    StandardReport {
        findings: picked
            .into_iter()
            .map(|(g, e, polarity)| Finding {
                laterality: GROUPS[g],
                term_id: t.entries()[e].term_id.clone(),
                polarity,
            })
            .collect(),
        lang,
    }
}

/// Free text for `r`: one sentence per laterality group with a spelled-out
/// marker, synonyms in place of canonical terms, and filler clauses.
pub fn synth_original(r: &StandardReport, t: &Terminology, cfg: &SynthConfig, rng: &mut Xorshift64Star) -> String {
    let zh = r.lang == Language::Zh;
    let mut sentences = Vec::new();
    for g in GROUPS {
        let group: Vec<&Finding> = r.findings.iter().filter(|f| f.laterality == g).collect();
        if group.is_empty() {
            continue;
        }
        let mut clauses: Vec<String> = Vec::new();
        if rng.chance(cfg.filler_rate) {
            clauses.push(rng.pick(if zh { &ZH_FILLER } else { &EN_FILLER }).to_string());
        }
        for f in group {
            let e = t.get(&f.term_id).expect("synthetic findings use store terms");
            let syn: Vec<&String> = e.synonyms(r.lang).iter().collect();
            let surface = if !syn.is_empty() && rng.chance(cfg.synonym_rate) {
                rng.pick(&syn).as_str()
            } else {
                e.canonical(r.lang)
            };
            clauses.push(match (f.polarity, zh) {
                (Polarity::Asserted, _) => surface.to_string(),
                (Polarity::Negated, true) => format!("{}{surface}", rng.pick(&["未见", "无"])),
                (Polarity::Negated, false) => format!("{} {surface}", rng.pick(&["no", "without"])),
            });
        }
        let marker = match (g, zh) {
            (Laterality::Unspecified, _) => "",
            (Laterality::Od, true) => "右眼",
            (Laterality::Os, true) => "左眼",
            (Laterality::Ou, true) => "双眼",
            (Laterality::Od, false) => *rng.pick(&["Right eye: ", "OD "]),
            (Laterality::Os, false) => *rng.pick(&["Left eye: ", "OS "]),
            (Laterality::Ou, false) => *rng.pick(&["Both eyes: ", "OU "]),
        };
        let body = clauses.join(if zh { "，" } else { ", " });
        sentences.push(format!("{marker}{body}{}", if zh { "。" } else { "." }));
    }
    sentences.join(if zh { "" } else { " " })
}

pub fn synth_pair(id: &str, t: &Terminology, lang: Language, cfg: &SynthConfig, rng: &mut Xorshift64Star) -> ReportPair {
    let r = synth_report(t, lang, cfg, rng);
    let original = synth_original(&r, t, cfg, rng);
    let standard = render_standard_report(&r, t).expect("synthetic findings use store terms");
    ReportPair::new(id, lang, original, standard).expect("synthetic pairs are well formed")
}

/// `n` pairs per language in `langs`, ids `<lang>-<index>` from 1. Pair
/// `i` of each language uses its own derived stream.
pub fn synth_corpus(n: usize, seed: u64, t: &Terminology, langs: &[Language], cfg: &SynthConfig) -> Corpus {
    let mut pairs = Vec::with_capacity(n * langs.len());
    for (li, &lang) in langs.iter().enumerate() {
        for i in 0..n {
            let mut rng = Xorshift64Star::derive(seed, (li * n + i) as u64);
            pairs.push(synth_pair(&format!("{}-{:04}", lang.tag(), i + 1), t, lang, cfg, &mut rng));
        }
    }
    Corpus::new(pairs).expect("ids are unique")
}

/// The bundled bilingual corpus, `synth_corpus(BUNDLED_PER_LANG,
/// BUNDLED_SEED, ..)` over the reference terminology.
pub fn bundled_corpus() -> Corpus {
    parse_corpus(include_str!("../data/synthetic_corpus.jsonl")).expect("bundled corpus parses")
}
