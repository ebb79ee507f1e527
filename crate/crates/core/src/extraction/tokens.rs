//! Span-preserving tokenizer and longest-match phrase matcher used by the
//! rule-based extractor.
//!
//! A token is either a maximal run of alphanumerics (plus `+` and `#`, so
//! `c++` and `c#` stay whole) or a single other non-whitespace character.
//! Offsets are in characters, not bytes.

use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub norm: String,
    pub start: usize,
    pub end: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '+' || c == '#'
}

pub(crate) fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut cur_start = 0;
    for (i, c) in text.chars().enumerate() {
        if is_word_char(c) {
            if cur.is_empty() {
                cur_start = i;
            }
            cur.extend(c.to_lowercase());
            continue;
        }
        if !cur.is_empty() {
            out.push(Token {
                norm: std::mem::take(&mut cur),
                start: cur_start,
                end: i,
            });
        }
        if !c.is_whitespace() {
            out.push(Token {
                norm: c.to_lowercase().collect(),
                start: i,
                end: i + 1,
            });
        }
    }
    if !cur.is_empty() {
        let end = cur_start + cur.chars().count();
        out.push(Token {
            norm: cur,
            start: cur_start,
            end,
        });
    }
    out
}

/// Token sequence of a phrase, ignoring offsets.
pub(crate) fn phrase_tokens(phrase: &str) -> Vec<String> {
    tokenize(phrase).into_iter().map(|t| t.norm).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct PhraseMatch {
    /// Index of the first matched token.
    pub first: usize,
    /// One past the last matched token.
    pub last: usize,
    pub label: usize,
}

/// Finds non-overlapping phrase occurrences, preferring the longest phrase
/// at each position and scanning left to right.
#[derive(Debug, Clone, Default)]
pub(crate) struct PhraseMatcher {
    by_first: HashMap<String, Vec<(Vec<String>, usize)>>,
}

impl PhraseMatcher {
    pub fn new<'a>(phrases: impl IntoIterator<Item = (&'a str, usize)>) -> Self {
        let mut by_first: HashMap<String, Vec<(Vec<String>, usize)>> = HashMap::new();
        for (p, label) in phrases {
            let toks = phrase_tokens(p);
            if let Some(first) = toks.first() {
                by_first.entry(first.clone()).or_default().push((toks, label));
            }
        }
        for cands in by_first.values_mut() {
            cands.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
            cands.dedup_by(|a, b| a.0 == b.0);
        }
        Self { by_first }
    }

    pub fn find_all(&self, tokens: &[Token]) -> Vec<PhraseMatch> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let hit = self.by_first.get(&tokens[i].norm).and_then(|cands| {
                cands.iter().find(|(seq, _)| {
                    i + seq.len() <= tokens.len()
                        && seq.iter().zip(&tokens[i..]).all(|(a, t)| *a == t.norm)
                })
            });
            match hit {
                Some((seq, label)) => {
                    out.push(PhraseMatch {
                        first: i,
                        last: i + seq.len(),
                        label: *label,
                    });
                    i += seq.len();
                }
                None => i += 1,
            }
        }
        out
    }
}
