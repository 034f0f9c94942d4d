use std::collections::HashSet;

use clinorm_core::augment::{
    augment_corpus, inject_syntactic_noise, perturb_semantics, replace_synonyms, AugmentConfig, ConfusionTables,
};
use clinorm_core::filter::{check_terminology, dedup_corpus, similarity};
use clinorm_core::rng::Xorshift64Star;
use clinorm_core::standardize::{render_standard_report, standardize_rule_based, standardize_text};
use clinorm_core::synth::{synth_corpus, synth_pair, synth_report, SynthConfig};
use clinorm_core::terminology::{reference_terminology, validate_entries};
use clinorm_core::{load_corpus, match_terms, Corpus, Language, Polarity, ReportPair};
use proptest::prelude::*;

fn lang_of(zh: bool) -> Language {
    if zh {
        Language::Zh
    } else {
        Language::En
    }
}

fn jaccard_oracle(a: &str, b: &str) -> f64 {
    let grams = |s: &str| -> HashSet<Vec<char>> {
        let v: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).flat_map(char::to_lowercase).collect();
        if v.is_empty() {
            HashSet::new()
        } else if v.len() < 3 {
            HashSet::from([v])
        } else {
            v.windows(3).map(|w| w.to_vec()).collect()
        }
    };
    let (x, y) = (grams(a), grams(b));
    if x.is_empty() && y.is_empty() {
        return 1.0;
    }
    let i = x.intersection(&y).count() as f64;
    i / (x.len() as f64 + y.len() as f64 - i)
}

fn corpus_of(texts: &[String]) -> Corpus {
    Corpus::new(
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| ReportPair::new(format!("r{i}"), Language::En, t.clone(), "s").unwrap())
            .collect(),
    )
    .unwrap()
}

fn negated(text: &str) -> Vec<String> {
    let t = reference_terminology();
    let mut v: Vec<String> = match_terms(text, &t)
        .into_iter()
        .filter(|m| m.polarity == Polarity::Negated)
        .map(|m| m.term_id)
        .collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn similarity_laws(a in "[abcd ]{0,14}", b in "[abcd ]{0,14}") {
        let ab: f64 = similarity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, similarity::<f64>(&b, &a));
        prop_assert!((ab - jaccard_oracle(&a, &b)).abs() < 1e-12);
        if !a.trim().is_empty() {
            prop_assert_eq!(similarity::<f64>(&a, &a), 1.0);
        }
    }

    #[test]
    fn dedup_matches_quadratic_oracle(
        texts in prop::collection::vec("[ab][abc]{2,10}", 1..40),
        threshold in prop::sample::select(vec![0.3, 0.5, 0.8, 0.9]),
    ) {
        let c = corpus_of(&texts);
        let report = dedup_corpus(&c, threshold);
        let mut oracle: Vec<usize> = Vec::new();
        for (i, t) in texts.iter().enumerate() {
            if oracle.iter().all(|&k| jaccard_oracle(&texts[k], t) <= threshold) {
                oracle.push(i);
            }
        }
        let kept: Vec<String> = report.kept.iter().map(|p| p.id.clone()).collect();
        let want: Vec<String> = oracle.iter().map(|i| format!("r{i}")).collect();
        prop_assert_eq!(&kept, &want);
        prop_assert_eq!(report.total(), texts.len());
        let again = dedup_corpus(&report.kept, threshold);
        prop_assert!(again.rejected.is_empty());
        for (i, a) in report.kept.iter().enumerate() {
            for b in &report.kept.pairs[i + 1..] {
                prop_assert!(jaccard_oracle(&a.original, &b.original) <= threshold);
            }
        }
    }

    #[test]
    fn zero_rates_are_identity(seed in any::<u64>(), zh in any::<bool>()) {
        let t = reference_terminology();
        let p = synth_pair("p", &t, lang_of(zh), &SynthConfig::default(), &mut Xorshift64Star::new(seed));
        let cfg = AugmentConfig::zero(seed);
        let tables = ConfusionTables::default();
        let mut rng = Xorshift64Star::new(seed ^ 1);
        prop_assert_eq!(inject_syntactic_noise(&p.original, &cfg, tables.for_lang(p.lang), &mut rng), p.original.clone());
        prop_assert_eq!(replace_synonyms(&p.original, &t, &cfg, &mut rng), p.original.clone());
        prop_assert_eq!(perturb_semantics(&p, &t, &cfg, &mut rng), p);
    }

    #[test]
    fn negation_is_label_consistent(seed in any::<u64>(), zh in any::<bool>()) {
        let t = reference_terminology();
        let p = synth_pair("p", &t, lang_of(zh), &SynthConfig::default(), &mut Xorshift64Star::new(seed));
        let cfg = AugmentConfig { negation_rate: 1.0, modifier_rate: 0.3, ..AugmentConfig::zero(seed) };
        let out = perturb_semantics(&p, &t, &cfg, &mut Xorshift64Star::new(seed));
        let gained = |before: Vec<String>, after: Vec<String>| {
            let mut after = after;
            for id in before {
                let k = after.iter().position(|x| *x == id).expect("negations are never removed");
                after.remove(k);
            }
            after
        };
        let orig_gain = gained(negated(&p.original), negated(&out.original));
        let std_gain = gained(negated(&p.standard), negated(&out.standard));
        prop_assert_eq!(orig_gain, std_gain);
        prop_assert_eq!(standardize_text(&out.original, &t), out.standard.clone());
    }

    #[test]
    fn augmentation_keeps_sources_and_unique_ids(seed in any::<u64>(), n in 1usize..12, extra in 0usize..40) {
        let t = reference_terminology();
        let src = synth_corpus(n, seed, &t, &Language::ALL, &SynthConfig::default());
        let cfg = AugmentConfig { seed, ..AugmentConfig::default() };
        let tables = ConfusionTables::default();
        let out = augment_corpus(&src, &t, &cfg, &tables, src.len() + extra).unwrap();
        prop_assert_eq!(&out.pairs[..src.len()], &src.pairs[..]);
        let ids: HashSet<&str> = out.iter().map(|p| p.id.as_str()).collect();
        prop_assert_eq!(ids.len(), out.len());
        prop_assert_eq!(augment_corpus(&src, &t, &cfg, &tables, src.len() + extra).unwrap(), out);
    }

    #[test]
    fn rendered_standard_passes_terminology_check(text in "(右眼|左眼|OD |未见|无|，|。|玻璃体浑浊|视盘苍白|黄斑区水肿|drusen|no |, |\\. |视盘|出血){1,12}") {
        let t = reference_terminology();
        let rendered = standardize_text(&text, &t);
        prop_assert!(check_terminology(&rendered, &t).is_empty(), "{}", rendered);
        prop_assert_eq!(standardize_text(&text, &t), rendered);
    }

    #[test]
    fn structured_round_trip(seed in any::<u64>(), zh in any::<bool>()) {
        let t = reference_terminology();
        let r = synth_report(&t, lang_of(zh), &SynthConfig::default(), &mut Xorshift64Star::new(seed));
        let text = render_standard_report(&r, &t).unwrap();
        prop_assert_eq!(standardize_rule_based(&text, &t), r);
    }

    #[test]
    fn longest_match_dominates(text in "(视网膜|新生血管|形成|脉络膜|色素|变性|玻璃体|出血|积血|黄斑|水肿|区){1,10}") {
        let t = reference_terminology();
        let chars: Vec<char> = text.chars().collect();
        let surfaces: Vec<Vec<char>> = t
            .entries()
            .iter()
            .flat_map(|e| std::iter::once(&e.zh).chain(e.synonyms_zh.iter()))
            .map(|s| s.chars().collect())
            .collect();
        let ms = match_terms(&text, &t);
        for w in ms.windows(2) {
            prop_assert!(w[0].end <= w[1].start);
        }
        for m in &ms {
            prop_assert!(m.end <= chars.len());
            for s in &surfaces {
                if chars[m.start..].starts_with(s) {
                    prop_assert!(s.len() <= m.end - m.start, "{} shadowed at {}", s.iter().collect::<String>(), m.start);
                }
            }
        }
    }
}

#[test]
fn typo_rate_calibration() {
    let t = reference_terminology();
    let tables = ConfusionTables::default();
    let texts = synth_corpus(60, 9, &t, &Language::ALL, &SynthConfig::default());
    for (k, p) in [0.01, 0.05, 0.2, 0.5].into_iter().enumerate() {
        let cfg = AugmentConfig { typo_rate: p, ..AugmentConfig::zero(k as u64) };
        let (mut n, mut hits) = (0usize, 0usize);
        for (i, pair) in texts.iter().enumerate() {
            let table = tables.for_lang(pair.lang);
            let out = inject_syntactic_noise(&pair.original, &cfg, table, &mut Xorshift64Star::derive(k as u64, i as u64));
            for (a, b) in pair.original.chars().zip(out.chars()) {
                if table.get(a.to_ascii_lowercase()).is_some() {
                    n += 1;
                    hits += usize::from(a != b);
                }
            }
        }
        assert!(n >= 1000);
        let observed = hits as f64 / n as f64;
        let bound = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
        assert!((observed - p).abs() <= bound, "rate {p}: observed {observed} over {n}");
    }
}

#[test]
fn reference_store_is_valid() {
    let t = reference_terminology();
    assert!(validate_entries(t.entries()).is_empty());
    assert_eq!(t.size(), 40);
}

#[test]
fn load_preserves_record_order() {
    let t = reference_terminology();
    let c = synth_corpus(30, 4, &t, &Language::ALL, &SynthConfig::default());
    let dir = std::env::temp_dir().join(format!("clinorm-order-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("c.jsonl");
    clinorm_core::corpus::write_corpus(&path, &c).unwrap();
    let back = load_corpus(&path).unwrap();
    let ids: Vec<&str> = back.iter().map(|p| p.id.as_str()).collect();
    let want: Vec<&str> = c.iter().map(|p| p.id.as_str()).collect();
    assert_eq!(ids, want);
    std::fs::remove_dir_all(&dir).ok();
}
