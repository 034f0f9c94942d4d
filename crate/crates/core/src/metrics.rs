//! Corpus-level NLG metrics (BLEU-1, BLEU-4, ROUGE-L, METEOR) with bilingual
//! tokenization. Scores are on a 0-100 scale and generic over the float type.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::Language;
use crate::num::{round2, Scalar};
use crate::text::{is_cjk, is_punct};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("length mismatch: {candidates} candidates vs {references} references")]
    LengthMismatch { candidates: usize, references: usize },
    #[error("n-gram order must be at least 1")]
    BadOrder,
    #[error("both sequences are empty")]
    BothEmpty,
    #[error("empty candidate or reference")]
    EmptySequence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub lang: Language,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn strip_edge_punct(tok: &str) -> &str {
    tok.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Tokenize for evaluation.
///
/// English: lowercase, whitespace split, edge punctuation stripped
/// (`c/d` survives). Chinese: one token per ideograph; runs of other
/// non-space, non-punctuation characters stay together (`C/D0.4`).
pub fn tokenize(text: &str, lang: Language) -> TokenSeq {
    let lower = text.to_lowercase();
    let tokens = match lang {
        Language::En => lower
            .split_whitespace()
            .map(strip_edge_punct)
            .filter(|t| !t.is_empty())
            .map(String::from)
            .collect(),
        Language::Zh => {
            let mut tokens = Vec::new();
            let mut run = String::new();
            let flush = |run: &mut String, tokens: &mut Vec<String>| {
                let t = strip_edge_punct(run);
                if !t.is_empty() {
                    tokens.push(t.to_string());
                }
                run.clear();
            };
            for c in lower.chars() {
                if is_cjk(c) {
                    flush(&mut run, &mut tokens);
                    tokens.push(c.to_string());
                } else if c.is_whitespace() || (is_punct(c) && !c.is_ascii()) {
                    flush(&mut run, &mut tokens);
                } else {
                    run.push(c);
                }
            }
            flush(&mut run, &mut tokens);
            tokens
        }
    };
    TokenSeq { tokens, lang }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for g in tokens.windows(n) {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus-level BLEU with uniform weights and no smoothing.
///
/// Clipped n-gram matches and candidate n-gram totals are summed over the
/// corpus before taking precisions; any zero precision gives 0.
pub fn bleu<F: Scalar>(
    candidates: &[TokenSeq],
    references: &[TokenSeq],
    max_n: usize,
) -> Result<F, MetricError> {
    check_aligned(candidates.len(), references.len())?;
    if max_n == 0 {
        return Err(MetricError::BadOrder);
    }
    let mut clipped = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let (mut cand_len, mut ref_len) = (0usize, 0usize);
    for (c, r) in candidates.iter().zip(references) {
        cand_len += c.len();
        ref_len += r.len();
        for n in 1..=max_n {
            let rc = ngram_counts(&r.tokens, n);
            for (g, k) in ngram_counts(&c.tokens, n) {
                clipped[n - 1] += k.min(rc.get(g).copied().unwrap_or(0));
            }
            totals[n - 1] += c.len().saturating_sub(n - 1);
        }
    }
    if cand_len == 0 || clipped.contains(&0) {
        return Ok(F::zero());
    }
    let weight = F::one() / F::count(max_n);
    let log_precision = clipped
        .iter()
        .zip(&totals)
        .fold(F::zero(), |acc, (&m, &t)| {
            acc + weight * (F::count(m) / F::count(t)).ln()
        });
    let bp = if cand_len > ref_len {
        F::one()
    } else {
        (F::one() - F::count(ref_len) / F::count(cand_len)).exp()
    };
    Ok(F::hundred() * bp * log_precision.exp())
}

/// Longest common subsequence length, two-row dynamic programme.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Sentence ROUGE-L F1 on a 0-100 scale.
pub fn rouge_l<F: Scalar>(candidate: &TokenSeq, reference: &TokenSeq) -> Result<F, MetricError> {
    if candidate.is_empty() && reference.is_empty() {
        return Err(MetricError::BothEmpty);
    }
    let l = lcs_len(&candidate.tokens, &reference.tokens);
    if l == 0 {
        return Ok(F::zero());
    }
    let p = F::count(l) / F::count(candidate.len());
    let r = F::count(l) / F::count(reference.len());
    Ok(F::hundred() * (F::of(2.0) * p * r) / (p + r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alignment {
    pub matches: usize,
    pub chunks: usize,
    /// `false` when the search budget ran out and the greedy alignment was used.
    pub exact: bool,
}

/// Memoised states before falling back to greedy chunking.
pub const ALIGNMENT_STATE_BUDGET: usize = 50_000;

/// Exact-match unigram alignment: the maximum number of matches, and among
/// maximum matchings the fewest chunks (runs contiguous and in order on both
/// sides).
///
/// The minimum is found by a memoised search over (candidate position,
/// previous reference position, used reference positions). Heavily repetitive
/// long inputs can exceed [`ALIGNMENT_STATE_BUDGET`]; those fall back to
/// greedy longest-block alignment, which keeps the match count maximal.
pub fn meteor_alignment<T: Eq + std::hash::Hash>(cand: &[T], refr: &[T]) -> Alignment {
    let mut ids: HashMap<&T, usize> = HashMap::new();
    let mut id = |t| {
        let next = ids.len();
        *ids.entry(t).or_insert(next)
    };
    let c: Vec<usize> = cand.iter().map(&mut id).collect();
    let r: Vec<usize> = refr.iter().map(&mut id).collect();
    let vocab = ids.len();

    let mut cc = vec![0usize; vocab];
    let mut rc = vec![0usize; vocab];
    c.iter().for_each(|&w| cc[w] += 1);
    r.iter().for_each(|&w| rc[w] += 1);
    let need: Vec<usize> = (0..vocab).map(|w| cc[w].min(rc[w])).collect();
    let matches: usize = need.iter().sum();
    if matches == 0 {
        return Alignment {
            matches: 0,
            chunks: 0,
            exact: true,
        };
    }

    let mut search = ChunkSearch::new(&c, &r, need);
    match search.run() {
        Some(chunks) => Alignment {
            matches,
            chunks,
            exact: true,
        },
        None => Alignment {
            matches,
            chunks: greedy_chunks(&c, &r),
            exact: false,
        },
    }
}

struct ChunkSearch<'a> {
    cand: &'a [usize],
    need: Vec<usize>,
    /// Occurrences of `cand[i]` in `cand[i..]`.
    remaining_here: Vec<usize>,
    positions: Vec<Vec<usize>>,
    memo: HashMap<(usize, usize, Vec<u64>), usize>,
    matched: Vec<usize>,
    mask: Vec<u64>,
    overflow: bool,
}

const NONE: usize = usize::MAX;

impl<'a> ChunkSearch<'a> {
    fn new(cand: &'a [usize], refr: &'a [usize], need: Vec<usize>) -> Self {
        let vocab = need.len();
        let mut positions = vec![Vec::new(); vocab];
        for (j, &w) in refr.iter().enumerate() {
            positions[w].push(j);
        }
        // occurrences of cand[i] at or after i
        let mut seen = vec![0usize; vocab];
        let mut remaining_here = vec![0usize; cand.len()];
        for i in (0..cand.len()).rev() {
            seen[cand[i]] += 1;
            remaining_here[i] = seen[cand[i]];
        }
        Self {
            cand,
            need,
            remaining_here,
            positions,
            memo: HashMap::new(),
            matched: vec![0; vocab],
            mask: vec![0; refr.len().div_ceil(64)],
            overflow: false,
        }
    }

    fn run(&mut self) -> Option<usize> {
        let best = self.solve(0, NONE);
        if self.overflow {
            None
        } else {
            best
        }
    }

    fn used(&self, j: usize) -> bool {
        self.mask[j / 64] >> (j % 64) & 1 == 1
    }

    fn toggle(&mut self, j: usize) {
        self.mask[j / 64] ^= 1 << (j % 64);
    }

    /// Fewest chunks for cand[i..] given the current state, or `None` when
    /// the required matches can no longer be met.
    fn solve(&mut self, i: usize, prev: usize) -> Option<usize> {
        if self.overflow {
            return None;
        }
        if i == self.cand.len() {
            return Some(0);
        }
        let key = (i, prev, self.mask.clone());
        if let Some(&v) = self.memo.get(&key) {
            return if v == NONE { None } else { Some(v) };
        }
        if self.memo.len() >= ALIGNMENT_STATE_BUDGET {
            self.overflow = true;
            return None;
        }
        let w = self.cand[i];
        let missing = self.need[w] - self.matched[w];
        let mut best: Option<usize> = None;
        if missing < self.remaining_here[i] {
            best = self.solve(i + 1, NONE);
        }
        if missing > 0 {
            self.matched[w] += 1;
            for k in 0..self.positions[w].len() {
                let j = self.positions[w][k];
                if self.used(j) {
                    continue;
                }
                let cost = usize::from(!(prev != NONE && j == prev + 1));
                self.toggle(j);
                let sub = self.solve(i + 1, j);
                self.toggle(j);
                if let Some(s) = sub {
                    if best.is_none_or(|b| s + cost < b) {
                        best = Some(s + cost);
                    }
                }
            }
            self.matched[w] -= 1;
        }
        self.memo.insert(key, best.unwrap_or(NONE));
        best
    }
}

/// Repeatedly fix the longest common block of still-unmatched tokens
/// (leftmost reference position first), then count chunks of the result.
fn greedy_chunks(c: &[usize], r: &[usize]) -> usize {
    let mut c_to_r = vec![NONE; c.len()];
    let mut r_used = vec![false; r.len()];
    loop {
        let mut best = (0usize, 0usize, 0usize); // (len, j, i)
        for j in 0..r.len() {
            for i in 0..c.len() {
                let mut len = 0;
                while i + len < c.len()
                    && j + len < r.len()
                    && c_to_r[i + len] == NONE
                    && !r_used[j + len]
                    && c[i + len] == r[j + len]
                {
                    len += 1;
                }
                if len > best.0 {
                    best = (len, j, i);
                }
            }
        }
        let (len, j, i) = best;
        if len == 0 {
            break;
        }
        for k in 0..len {
            c_to_r[i + k] = j + k;
            r_used[j + k] = true;
        }
    }
    chunks_of(&c_to_r)
}

fn chunks_of(c_to_r: &[usize]) -> usize {
    let mut chunks = 0;
    for i in 0..c_to_r.len() {
        if c_to_r[i] == NONE {
            continue;
        }
        let continues = i > 0 && c_to_r[i - 1] != NONE && c_to_r[i - 1] + 1 == c_to_r[i];
        if !continues {
            chunks += 1;
        }
    }
    chunks
}

/// METEOR score from an alignment and the two lengths.
pub fn meteor_from_alignment<F: Scalar>(a: Alignment, cand_len: usize, ref_len: usize) -> F {
    if a.matches == 0 {
        return F::zero();
    }
    let m = F::count(a.matches);
    let p = m / F::count(cand_len);
    let r = m / F::count(ref_len);
    let f_mean = F::of(10.0) * p * r / (r + F::of(9.0) * p);
    let frag = F::count(a.chunks) / m;
    let penalty = F::of(0.5) * frag * frag * frag;
    F::hundred() * f_mean * (F::one() - penalty)
}

/// Sentence METEOR, exact-match module only.
pub fn meteor<F: Scalar>(candidate: &TokenSeq, reference: &TokenSeq) -> Result<F, MetricError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptySequence);
    }
    let a = meteor_alignment(&candidate.tokens, &reference.tokens);
    Ok(meteor_from_alignment(a, candidate.len(), reference.len()))
}

fn check_aligned(candidates: usize, references: usize) -> Result<(), MetricError> {
    if candidates != references {
        return Err(MetricError::LengthMismatch {
            candidates,
            references,
        });
    }
    if candidates == 0 {
        return Err(MetricError::EmptyCorpus);
    }
    Ok(())
}

/// Mean of sentence scores, summed in input order.
fn mean<F: Scalar>(xs: &[F]) -> F {
    xs.iter().fold(F::zero(), |a, &x| a + x) / F::count(xs.len())
}

/// Corpus ROUGE-L: arithmetic mean of sentence F1.
pub fn rouge_l_corpus<F: Scalar>(
    candidates: &[TokenSeq],
    references: &[TokenSeq],
) -> Result<F, MetricError> {
    check_aligned(candidates.len(), references.len())?;
    let scores = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| rouge_l(c, r))
        .collect::<Result<Vec<F>, _>>()?;
    Ok(mean(&scores))
}

/// Corpus METEOR: arithmetic mean of sentence scores.
pub fn meteor_corpus<F: Scalar>(
    candidates: &[TokenSeq],
    references: &[TokenSeq],
) -> Result<F, MetricError> {
    check_aligned(candidates.len(), references.len())?;
    let scores = candidates
        .par_iter()
        .zip(references)
        .map(|(c, r)| meteor(c, r))
        .collect::<Result<Vec<F>, _>>()?;
    Ok(mean(&scores))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores<F> {
    pub bleu1: F,
    pub bleu4: F,
    pub meteor: F,
    pub rouge_l: F,
}

impl<F: Scalar> Scores<F> {
    pub fn rounded(&self) -> Self {
        Self {
            bleu1: round2(self.bleu1),
            bleu4: round2(self.bleu4),
            meteor: round2(self.meteor),
            rouge_l: round2(self.rouge_l),
        }
    }

    pub fn as_array(&self) -> [F; 4] {
        [self.bleu1, self.bleu4, self.meteor, self.rouge_l]
    }

    pub fn in_range(&self) -> bool {
        self.as_array()
            .iter()
            .all(|&x| !x.is_nan() && x >= F::zero() && x <= F::hundred())
    }
}

/// Tokenize both sides and compute all four metrics.
///
/// Sentence pairs with an empty side score 0 for ROUGE-L and METEOR (100
/// when both sides are empty) instead of failing the whole corpus.
pub fn evaluate_corpus<F: Scalar>(
    hypotheses: &[String],
    references: &[String],
    lang: Language,
) -> Result<Scores<F>, MetricError> {
    check_aligned(hypotheses.len(), references.len())?;
    let hyp: Vec<TokenSeq> = hypotheses.iter().map(|h| tokenize(h, lang)).collect();
    let refs: Vec<TokenSeq> = references.iter().map(|r| tokenize(r, lang)).collect();
    let per_pair: Vec<(F, F)> = hyp
        .par_iter()
        .zip(&refs)
        .map(|(h, r)| match (h.is_empty(), r.is_empty()) {
            (true, true) => (F::hundred(), F::hundred()),
            (true, false) | (false, true) => (F::zero(), F::zero()),
            _ => (
                rouge_l(h, r).expect("nonempty"),
                meteor(h, r).expect("nonempty"),
            ),
        })
        .collect();
    let rouge: Vec<F> = per_pair.iter().map(|p| p.0).collect();
    let met: Vec<F> = per_pair.iter().map(|p| p.1).collect();
    Ok(Scores {
        bleu1: bleu(&hyp, &refs, 1)?,
        bleu4: bleu(&hyp, &refs, 4)?,
        meteor: mean(&met),
        rouge_l: mean(&rouge),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn en(s: &str) -> TokenSeq {
        tokenize(s, Language::En)
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn tokenization() {
        assert_eq!(en("OD: Optic disc clear.").tokens, ["od", "optic", "disc", "clear"]);
        assert_eq!(en("c/d 0.4, (-)").tokens, ["c/d", "0.4"]);
        assert_eq!(
            tokenize("视盘界清C/D0.4", Language::Zh).tokens,
            ["视", "盘", "界", "清", "c/d0.4"]
        );
        assert_eq!(
            tokenize("OU：无玻璃体混浊。", Language::Zh).tokens,
            ["ou", "无", "玻", "璃", "体", "混", "浊"]
        );
        assert!(tokenize("", Language::Zh).is_empty());
        assert!(en("").is_empty());
    }

    #[test]
    fn bleu_fixtures() {
        let b1: f64 = bleu(&[en("the cat")], &[en("the cat sat")], 1).unwrap();
        assert!((b1 - 100.0 * (-0.5f64).exp()).abs() < 1e-12);
        assert_eq!(round2(b1), 60.65);
        let b4: f64 = bleu(&[en("a b c d e")], &[en("a b c d f")], 4).unwrap();
        assert!((b4 - 100.0 * 0.2f64.powf(0.25)).abs() < 1e-12);
        assert_eq!(round2(b4), 66.87);
    }

    #[test]
    fn bleu_identity_and_zero() {
        let c = vec![en("optic disc margin clear today"), en("no vitreous opacity seen here")];
        assert_eq!(bleu::<f64>(&c, &c, 1).unwrap(), 100.0);
        assert_eq!(bleu::<f64>(&c, &c, 4).unwrap(), 100.0);
        assert_eq!(bleu::<f64>(&[en("x y")], &[en("x y")], 4).unwrap(), 0.0);
        assert_eq!(bleu::<f64>(&[en("a")], &[en("b")], 1).unwrap(), 0.0);
        assert_eq!(
            bleu::<f64>(&[en("a")], &[], 1).unwrap_err(),
            MetricError::LengthMismatch {
                candidates: 1,
                references: 0
            }
        );
        assert_eq!(bleu::<f64>(&[], &[], 1).unwrap_err(), MetricError::EmptyCorpus);
    }

    #[test]
    fn rouge_fixtures() {
        let a = en("a b c d");
        assert_eq!(rouge_l::<f64>(&a, &a).unwrap(), 100.0);
        assert!((rouge_l::<f64>(&a, &en("a c b d")).unwrap() - 75.0).abs() < 1e-12);
        assert_eq!(rouge_l::<f64>(&a, &en("x y")).unwrap(), 0.0);
        assert_eq!(rouge_l::<f64>(&en(""), &en("")).unwrap_err(), MetricError::BothEmpty);
    }

    #[test]
    fn meteor_fixtures() {
        let a = en("w x y z");
        let m: f64 = meteor(&a, &a).unwrap();
        assert!((m - 100.0 * (1.0 - 0.5 / 64.0)).abs() < 1e-12);
        assert_eq!(round2(m), 99.22);

        let c = en("the cat sat on mat");
        let r = en("the cat sat on the mat");
        let al = meteor_alignment(&c.tokens, &r.tokens);
        assert_eq!((al.matches, al.chunks, al.exact), (5, 2, true));
        let m: f64 = meteor(&c, &r).unwrap();
        let expected = 100.0 * (50.0 / 59.0) * (1.0 - 0.5 * 0.4f64.powi(3));
        assert!((m - expected).abs() < 1e-12);
        assert_eq!(round2(m), 82.03);
        assert_eq!(meteor::<f64>(&en("a b"), &en("c d")).unwrap(), 0.0);
        assert_eq!(meteor::<f64>(&en(""), &en("c")).unwrap_err(), MetricError::EmptySequence);
    }

    #[test]
    fn alignment_prefers_fewer_chunks() {
        // greedy-by-position would take ref "a"@0 for cand "a"@1 and split the run
        let al = meteor_alignment(&toks("b a c"), &toks("a x b a c"));
        assert_eq!((al.matches, al.chunks), (3, 1));
        let al = meteor_alignment(&toks("a a a"), &toks("a a"));
        assert_eq!((al.matches, al.chunks), (2, 1));
    }

    #[test]
    fn greedy_fallback_keeps_max_matches() {
        let c: Vec<usize> = (0..200).map(|i| i % 3).collect();
        let r: Vec<usize> = (0..190).map(|i| (i * 7) % 3).collect();
        let al = meteor_alignment(&c, &r);
        assert_eq!(al.matches, 190);
        assert!(al.chunks >= 1 && al.chunks <= 190);
    }

    #[test]
    fn lcs_small() {
        assert_eq!(lcs_len(&toks("a b c d"), &toks("a c b d")), 3);
        assert_eq!(lcs_len::<String>(&[], &toks("a")), 0);
    }

    #[test]
    fn evaluate_identity_and_errors() {
        let refs = vec![
            "OD: optic disc margin clear; OS: no vitreous opacity.".to_string(),
            "OU: drusen; OD: macular edema.".to_string(),
        ];
        let s: Scores<f64> = evaluate_corpus(&refs, &refs, Language::En).unwrap();
        assert_eq!(s.bleu1, 100.0);
        assert_eq!(s.bleu4, 100.0);
        assert_eq!(s.rouge_l, 100.0);
        let lens = [9.0f64, 5.0];
        let expected = lens.iter().map(|l| 100.0 * (1.0 - 0.5 / l.powi(3))).sum::<f64>() / 2.0;
        assert!((s.meteor - expected).abs() < 1e-12);
        assert!(evaluate_corpus::<f64>(&refs[..1], &refs, Language::En).is_err());
        assert!(evaluate_corpus::<f64>(&[], &[], Language::En).is_err());
        let f: Scores<f32> = evaluate_corpus(&refs, &refs, Language::En).unwrap();
        assert_eq!(f.bleu1, 100.0f32);
    }

    #[test]
    fn empty_hypothesis_scores_zero() {
        let s: Scores<f64> =
            evaluate_corpus(&["".to_string()], &["OD: drusen.".to_string()], Language::En).unwrap();
        assert_eq!(s.as_array(), [0.0; 4]);
    }
}
