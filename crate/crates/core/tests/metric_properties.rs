use std::collections::HashMap;
use std::slice::from_ref;

use clinorm_core::metrics::{bleu, lcs_len, meteor, meteor_alignment, rouge_l, TokenSeq};
use clinorm_core::Language;
use proptest::prelude::*;

fn seq(tokens: &[String]) -> TokenSeq {
    TokenSeq {
        tokens: tokens.to_vec(),
        lang: Language::En,
    }
}

fn tokens(vocab: usize, max_len: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec((0..vocab).prop_map(|i| format!("w{i}")), 1..=max_len)
}

fn quadratic_lcs(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in (0..a.len()).rev() {
        for j in (0..b.len()).rev() {
            t[i][j] = if a[i] == b[j] { 1 + t[i + 1][j + 1] } else { t[i + 1][j].max(t[i][j + 1]) };
        }
    }
    t[0][0]
}

/// Every matching, by recursion over candidate positions; best is most
/// matches, then fewest chunks.
fn exhaustive_alignment(c: &[String], r: &[String]) -> (usize, usize) {
    fn go(c: &[String], r: &[String], i: usize, used: &mut Vec<bool>, map: &mut Vec<Option<usize>>, best: &mut (usize, usize)) {
        if i == c.len() {
            let m = map.iter().flatten().count();
            let mut chunks = 0;
            let mut prev: Option<usize> = None;
            for cur in map.iter() {
                match (prev, *cur) {
                    (Some(p), Some(j)) if p + 1 == j => {}
                    (_, Some(_)) => chunks += 1,
                    _ => {}
                }
                prev = *cur;
            }
            if m > best.0 || (m == best.0 && chunks < best.1) {
                *best = (m, chunks);
            }
            return;
        }
        map.push(None);
        go(c, r, i + 1, used, map, best);
        map.pop();
        for j in 0..r.len() {
            if !used[j] && c[i] == r[j] {
                used[j] = true;
                map.push(Some(j));
                go(c, r, i + 1, used, map, best);
                map.pop();
                used[j] = false;
            }
        }
    }
    let mut best = (0, usize::MAX);
    go(c, r, 0, &mut vec![false; r.len()], &mut Vec::new(), &mut best);
    if best.0 == 0 {
        (0, 0)
    } else {
        best
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scores_in_range(c in tokens(6, 12), r in tokens(6, 12)) {
        let (cs, rs) = (seq(&c), seq(&r));
        for s in [
            bleu::<f64>(from_ref(&cs), from_ref(&rs), 1).unwrap(),
            bleu::<f64>(from_ref(&cs), from_ref(&rs), 4).unwrap(),
            rouge_l::<f64>(&cs, &rs).unwrap(),
            meteor::<f64>(&cs, &rs).unwrap(),
        ] {
            prop_assert!((0.0..=100.0 + 1e-9).contains(&s));
        }
    }

    #[test]
    fn rouge_symmetric(c in tokens(5, 15), r in tokens(5, 15)) {
        let a: f64 = rouge_l(&seq(&c), &seq(&r)).unwrap();
        let b: f64 = rouge_l(&seq(&r), &seq(&c)).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn bleu_order_invariant(pairs in prop::collection::vec((tokens(4, 10), tokens(4, 10)), 1..8), rot in 0usize..8) {
        let cs: Vec<TokenSeq> = pairs.iter().map(|p| seq(&p.0)).collect();
        let rs: Vec<TokenSeq> = pairs.iter().map(|p| seq(&p.1)).collect();
        let k = rot % pairs.len();
        let mut cs2 = cs.clone();
        let mut rs2 = rs.clone();
        cs2.rotate_left(k);
        rs2.rotate_left(k);
        cs2.reverse();
        rs2.reverse();
        for n in [1, 4] {
            let a: f64 = bleu(&cs, &rs, n).unwrap();
            let b: f64 = bleu(&cs2, &rs2, n).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn alignment_matches_exhaustive(c in tokens(4, 8), r in tokens(4, 8)) {
        let a = meteor_alignment(&c, &r);
        prop_assert!(a.exact);
        prop_assert_eq!((a.matches, a.chunks), exhaustive_alignment(&c, &r));
    }

    #[test]
    fn lcs_matches_quadratic(a in tokens(5, 50), b in tokens(5, 50)) {
        prop_assert_eq!(lcs_len(&a, &b), quadratic_lcs(&a, &b));
    }

    #[test]
    fn max_matches_is_clipped_unigram_overlap(c in tokens(5, 12), r in tokens(5, 12)) {
        let mut counts: HashMap<&String, (usize, usize)> = HashMap::new();
        c.iter().for_each(|t| counts.entry(t).or_default().0 += 1);
        r.iter().for_each(|t| counts.entry(t).or_default().1 += 1);
        let overlap: usize = counts.values().map(|&(x, y)| x.min(y)).sum();
        prop_assert_eq!(meteor_alignment(&c, &r).matches, overlap);
    }
}
