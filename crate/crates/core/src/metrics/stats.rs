//! Corpus statistics.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::corpus::{Dialogue, Role};
use crate::text::word_count;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StatsReport {
    pub dialogues: usize,
    pub utterances: usize,
    pub user_utterances: usize,
    pub words: usize,
    pub avg_words_per_utterance: f64,
    pub user_speakers: usize,
    pub assistant_speakers: usize,
    pub total_duration_s: f64,
    /// Slot values dictated over several turns.
    pub cross_turn_slots: usize,
    pub cross_turn_segments: usize,
    pub cross_turn_errors: usize,
    /// Interrupting user turns.
    pub barge_ins: usize,
    pub barge_in_types: BTreeMap<String, usize>,
    pub barge_in_subtypes: BTreeMap<String, usize>,
    pub disfluent_turns: usize,
    pub disfluency_types: BTreeMap<String, usize>,
    /// User-turn emotion labels.
    pub emotions: BTreeMap<String, usize>,
    pub accents: BTreeMap<String, usize>,
    pub sources: BTreeMap<String, usize>,
}

pub fn dataset_stats(corpus: &[Dialogue]) -> StatsReport {
    let mut r = StatsReport::default();
    let mut users = BTreeSet::new();
    let mut assistants = BTreeSet::new();
    for d in corpus {
        r.dialogues += 1;
        *r.sources.entry(d.source.clone()).or_default() += 1;
        if let Some(s) = &d.user_speaker {
            if users.insert(s.speaker_id.clone()) {
                *r.accents.entry(s.accent_pool.to_string()).or_default() += 1;
            }
        }
        if let Some(s) = &d.assistant_speaker {
            assistants.insert(s.speaker_id.clone());
        }
        for t in &d.turns {
            r.utterances += 1;
            r.words += word_count(&t.text);
            r.total_duration_s += t.duration_s.unwrap_or(0.0);
            if let Some(c) = &t.crossturn {
                r.cross_turn_segments += 1;
                if c.chunk_index == 0 && !c.is_correction {
                    r.cross_turn_slots += 1;
                }
                if c.is_error {
                    r.cross_turn_errors += 1;
                }
            }
            if t.role == Role::Assistant {
                continue;
            }
            r.user_utterances += 1;
            if let Some(b) = &t.bargein {
                r.barge_ins += 1;
                *r.barge_in_types.entry(b.kind.name().to_string()).or_default() += 1;
                *r.barge_in_subtypes.entry(b.subtype()).or_default() += 1;
            }
            if !t.disfluency.is_empty() {
                r.disfluent_turns += 1;
            }
            for m in &t.disfluency {
                *r.disfluency_types.entry(m.kind.marker().to_string()).or_default() += 1;
            }
            if let Some(e) = t.emotion {
                *r.emotions.entry(e.name().to_string()).or_default() += 1;
            }
        }
    }
    r.user_speakers = users.len();
    r.assistant_speakers = assistants.len();
    if r.utterances > 0 {
        r.avg_words_per_utterance = r.words as f64 / r.utterances as f64;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BargeInMeta, BargeInStyle, BargeInType, Goal, Turn};

    fn d(id: &str, turns: Vec<Turn>) -> Dialogue {
        Dialogue::new(id, "generic", Goal { text: "g".into(), sub_goals: vec![] }, turns)
    }

    #[test]
    fn arithmetic() {
        let mk = || {
            vec![
                Turn::user("a b"),
                Turn::assistant("c d"),
                Turn::user("e f"),
                Turn::assistant("g h"),
            ]
        };
        let r = dataset_stats(&[d("x", mk()), d("y", mk())]);
        assert_eq!((r.dialogues, r.utterances, r.words), (2, 8, 16));
        assert_eq!(r.avg_words_per_utterance, 2.0);
    }

    #[test]
    fn barge_in_counts() {
        let meta = BargeInMeta {
            kind: BargeInType::Efficiency,
            style: BargeInStyle::Implicit,
            erroneous_slots: None,
            corrected_slots: None,
        };
        let mut turns = Vec::new();
        for _ in 0..3 {
            let mut a = Turn::assistant("Your table is<bargein>");
            a.bargein = Some(meta.clone());
            let mut u = Turn::user("Uh-huh.");
            u.bargein = Some(meta.clone());
            turns.push(a);
            turns.push(u);
        }
        let r = dataset_stats(&[d("x", turns)]);
        assert_eq!(r.barge_ins, 3);
        assert_eq!(r.barge_in_types["efficiency"], 3);
    }

    #[test]
    fn empty_corpus() {
        assert_eq!(dataset_stats(&[]), StatsReport::default());
    }
}
