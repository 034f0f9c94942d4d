//! Character classes shared by tokenization, matching and filtering.

/// CJK Unified Ideographs, extensions A-F and the compatibility block.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x4E00..=0x9FFF
        | 0x3400..=0x4DBF
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2EBEF
        | 0xF900..=0xFAFF
        | 0x2F800..=0x2FA1F)
}

/// Latin letters and digits participate in word boundaries; ideographs do not.
pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() && !is_cjk(c)
}

pub fn is_clause_delim(c: char) -> bool {
    matches!(c, '，' | ',' | ';' | '；' | '。' | '.')
}

pub fn is_sentence_delim(c: char) -> bool {
    matches!(c, '。' | '.' | ';' | '；' | '!' | '?' | '！' | '？')
}

/// Punctuation subject to deletion and splitting during noise injection.
pub fn is_noise_punct(c: char) -> bool {
    matches!(
        c,
        ',' | '.' | ';' | ':' | '!' | '?' | '，' | '。' | '；' | '：' | '！' | '？' | '、'
    )
}

pub fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '，' | '。' | '；' | '：' | '！' | '？' | '、' | '（' | '）' | '【' | '】' | '“' | '”'
                | '‘' | '’' | '《' | '》' | '…' | '—' | '·' | '～'
        )
}

/// Lowercase one character, keeping it when lowercasing would change the
/// codepoint count (offsets into the folded text stay aligned with the source).
pub fn fold_char(c: char) -> char {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

pub fn fold(s: &str) -> String {
    s.chars().map(fold_char).collect()
}

/// `true` when a period at `i` sits between two ASCII digits (a decimal point).
pub fn is_decimal_point(chars: &[char], i: usize) -> bool {
    chars[i] == '.'
        && i > 0
        && i + 1 < chars.len()
        && chars[i - 1].is_ascii_digit()
        && chars[i + 1].is_ascii_digit()
}

/// Word-boundary test for a candidate span `[start, end)` over `chars`.
///
/// Spans whose edge character is a Latin letter or digit must not continue
/// into an adjacent Latin letter or digit. Ideographic edges never need a
/// boundary.
pub fn at_boundaries(chars: &[char], start: usize, end: usize) -> bool {
    let left_ok = start == 0 || !is_word_char(chars[start]) || !is_word_char(chars[start - 1]);
    let right_ok =
        end >= chars.len() || !is_word_char(chars[end - 1]) || !is_word_char(chars[end]);
    left_ok && right_ok
}

/// All boundary-respecting occurrences of `needle` in `hay` (both folded).
pub fn find_all(hay: &[char], needle: &[char]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if needle.is_empty() || needle.len() > hay.len() {
        return out;
    }
    for start in 0..=hay.len() - needle.len() {
        let end = start + needle.len();
        if hay[start..end] == *needle && at_boundaries(hay, start, end) {
            out.push((start, end));
        }
    }
    out
}
