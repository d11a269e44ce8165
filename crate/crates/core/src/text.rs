//! Character-offset helpers.
//!
//! Slot spans in the unified schema are expressed in Unicode scalar offsets
//! (the convention of the source corpora), while Rust strings are indexed by
//! byte. Everything that converts between the two lives here.

use std::ops::Range;

/// A whitespace-delimited word with its character range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Word<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Byte offset of the `ci`-th character, or `s.len()` for `ci == char_len(s)`.
pub fn byte_offset(s: &str, ci: usize) -> Option<usize> {
    if ci == 0 {
        return Some(0);
    }
    let mut count = 0;
    for (b, _) in s.char_indices() {
        if count == ci {
            return Some(b);
        }
        count += 1;
    }
    (count == ci).then_some(s.len())
}

pub fn char_offset(s: &str, byte: usize) -> usize {
    s[..byte].chars().count()
}

pub fn byte_range(s: &str, start: usize, end: usize) -> Option<Range<usize>> {
    if start > end {
        return None;
    }
    Some(byte_offset(s, start)?..byte_offset(s, end)?)
}

/// Substring by character range.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    byte_range(s, start, end).map(|r| &s[r])
}

pub fn words(s: &str) -> Vec<Word<'_>> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut ci = 0;
    for (b, c) in s.char_indices() {
        if c.is_whitespace() {
            if let Some((sb, sc)) = start.take() {
                out.push(Word {
                    text: &s[sb..b],
                    start: sc,
                    end: ci,
                });
            }
        } else if start.is_none() {
            start = Some((b, ci));
        }
        ci += 1;
    }
    if let Some((sb, sc)) = start {
        out.push(Word {
            text: &s[sb..],
            start: sc,
            end: ci,
        });
    }
    out
}

pub fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Trailing punctuation attached to a word (`"member,"` → `","`).
pub fn split_trailing_punct(word: &str) -> (&str, &str) {
    let core = word.trim_end_matches(is_punct);
    (core, &word[core.len()..])
}

pub fn is_punct(c: char) -> bool {
    matches!(c, ',' | '.' | '!' | '?' | ';' | ':')
}
