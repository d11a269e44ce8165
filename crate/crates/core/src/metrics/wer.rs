//! Word error rate.

use crate::{Error, Result};

/// Word-level Levenshtein distance with unit costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn wer<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    Ok(edit_distance(reference, hypothesis) as f64 / reference.len() as f64)
}

/// Lowercased words with surrounding punctuation removed.
pub fn wer_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'').to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// WER between two strings after [`wer_tokens`].
pub fn wer_text(reference: &str, hypothesis: &str) -> Result<f64> {
    wer(&wer_tokens(reference), &wer_tokens(hypothesis))
}

/// Corpus-level WER: total edits over total reference words.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WerAccumulator {
    pub edits: usize,
    pub ref_words: usize,
    pub utterances: usize,
}

impl WerAccumulator {
    pub fn add(&mut self, reference: &str, hypothesis: &str) {
        let (r, h) = (wer_tokens(reference), wer_tokens(hypothesis));
        self.edits += edit_distance(&r, &h);
        self.ref_words += r.len();
        self.utterances += 1;
    }

    pub fn merge(&mut self, other: &WerAccumulator) {
        self.edits += other.edits;
        self.ref_words += other.ref_words;
        self.utterances += other.utterances;
    }

    pub fn rate(&self) -> Option<f64> {
        (self.ref_words > 0).then(|| self.edits as f64 / self.ref_words as f64)
    }
}
