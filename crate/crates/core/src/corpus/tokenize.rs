//! Rule-based word tokenizer.
//!
//! The rule, applied to each whitespace-delimited chunk of a line:
//!
//! 1. A word is a maximal run of alphanumeric characters. A hyphen or an
//!    apostrophe (`'` or `’`) stays inside a word when it has an alphanumeric
//!    character on both sides; `.` and `,` stay inside when they have an ASCII
//!    digit on both sides (`3.5`, `1,000`).
//! 2. Every other character becomes a single-character token.
//! 3. Contractions are split from the word they attach to:
//!    a trailing `n't` becomes its own token (`didn't` → `did` `n't`,
//!    `can't` → `ca` `n't`), and a trailing apostrophe clitic
//!    `'s`, `'re`, `'ve`, `'ll`, `'d`, `'m` likewise (`it's` → `it` `'s`).
//!    Other internal apostrophes are kept (`O'Brien`).
//!
//! Token spans are byte offsets into the original line, so the line can be
//! reconstructed exactly from the spans and the gaps between them.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// Case-folded form of `surface`.
    pub lower: String,
    /// Byte range `[start, end)` of the token in its source line.
    pub span: (usize, usize),
}

impl Token {
    pub fn new(surface: &str, start: usize) -> Self {
        Token {
            surface: surface.to_string(),
            lower: surface.to_lowercase(),
            span: (start, start + surface.len()),
        }
    }
}

const CLITICS: [&str; 6] = ["s", "re", "ve", "ll", "d", "m"];

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '’'
}

pub fn tokenize(line: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if !c.is_alphanumeric() {
            let end = start + c.len_utf8();
            out.push(Token::new(&line[start..end], start));
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() {
            let cj = chars[j].1;
            if cj.is_alphanumeric() {
                j += 1;
                continue;
            }
            let prev = chars[j - 1].1;
            let next = chars.get(j + 1).map(|&(_, n)| n);
            let joins = match next {
                Some(n) if cj == '-' || is_apostrophe(cj) => {
                    prev.is_alphanumeric() && n.is_alphanumeric()
                }
                Some(n) if cj == '.' || cj == ',' => prev.is_ascii_digit() && n.is_ascii_digit(),
                _ => false,
            };
            if joins {
                j += 1;
            } else {
                break;
            }
        }
        let end = chars.get(j).map_or(line.len(), |&(b, _)| b);
        split_contraction(&line[start..end], start, &mut out);
        i = j;
    }
    out
}

fn split_contraction(word: &str, start: usize, out: &mut Vec<Token>) {
    if let Some(cut) = contraction_cut(word) {
        out.push(Token::new(&word[..cut], start));
        out.push(Token::new(&word[cut..], start + cut));
    } else {
        out.push(Token::new(word, start));
    }
}

/// Byte index where a trailing contraction starts, if any.
fn contraction_cut(word: &str) -> Option<usize> {
    let lower = word.to_lowercase();
    // lower-casing can change byte lengths for non-ASCII text; only look at
    // the suffix when the lengths agree
    if lower.len() != word.len() {
        return None;
    }
    for apos in ["'", "’"] {
        let nt = format!("n{apos}t");
        if lower.ends_with(&nt) && lower.len() > nt.len() {
            return Some(word.len() - nt.len());
        }
        for clitic in CLITICS {
            let suffix = format!("{apos}{clitic}");
            if lower.ends_with(&suffix) && lower.len() > suffix.len() {
                return Some(word.len() - suffix.len());
            }
        }
    }
    None
}

/// Rebuilds a line from tokens, taking the separators from `original`.
pub fn detokenize(tokens: &[Token], original: &str) -> String {
    let mut out = String::with_capacity(original.len());
    let mut cursor = 0;
    for t in tokens {
        out.push_str(&original[cursor..t.span.0]);
        out.push_str(&t.surface);
        cursor = t.span.1;
    }
    out.push_str(&original[cursor..]);
    out
}
