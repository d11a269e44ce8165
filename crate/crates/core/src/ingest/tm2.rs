//! Taskmaster-2 records.
//!
//! Segments carry `start_index`/`end_index` character offsets and one or more
//! annotation names such as `restaurant.name.accept`. The first component is
//! the domain; a trailing `accept`/`reject` is dropped. The source has no
//! intents, so every sub-goal uses the domain's search intent.

use serde::Deserialize;

use super::{checked_span, merge_turns, tidy_spans, GoalBuilder, RawTurn, Warnings};
use crate::corpus::{Dialogue, Role};

#[derive(Debug, Deserialize)]
pub(crate) struct Tm2Dialogue {
    conversation_id: String,
    utterances: Vec<Tm2Utterance>,
}

#[derive(Debug, Deserialize)]
struct Tm2Utterance {
    speaker: String,
    text: String,
    #[serde(default)]
    segments: Vec<Tm2Segment>,
}

#[derive(Debug, Deserialize)]
struct Tm2Segment {
    start_index: usize,
    end_index: usize,
    text: String,
    #[serde(default)]
    annotations: Vec<Tm2Annotation>,
}

#[derive(Debug, Deserialize)]
struct Tm2Annotation {
    name: String,
}

pub(crate) const INTENT: &str = "search";

/// `(domain, slot, rejected)` from an annotation name.
pub(crate) fn split_name(name: &str) -> (String, String, bool) {
    let mut parts: Vec<&str> = name.split('.').collect();
    let rejected = parts.last() == Some(&"reject");
    if matches!(parts.last(), Some(&"accept") | Some(&"reject")) && parts.len() > 2 {
        parts.pop();
    }
    let domain = parts.first().copied().unwrap_or_default().to_string();
    let slot = if parts.len() > 1 { parts[1..].join(".") } else { domain.clone() };
    (domain, slot, rejected)
}

pub(crate) fn adapt(raw: Tm2Dialogue, w: &mut Warnings) -> Dialogue {
    let mut goal = GoalBuilder::default();
    let mut turns = Vec::with_capacity(raw.utterances.len());
    for (i, u) in raw.utterances.iter().enumerate() {
        let role = if u.speaker.eq_ignore_ascii_case("user") {
            Role::User
        } else {
            Role::Assistant
        };
        let mut spans = Vec::new();
        for seg in &u.segments {
            for a in &seg.annotations {
                let (domain, slot, rejected) = split_name(&a.name);
                let Some(span) = checked_span(&u.text, &slot, seg.start_index, seg.end_index, Some(&seg.text), i, w)
                else {
                    continue;
                };
                spans.push(span);
                if role == Role::User && !rejected {
                    goal.constraint(&domain, INTENT, &slot, &seg.text);
                }
            }
        }
        turns.push(RawTurn::new(role, u.text.clone(), tidy_spans(spans, i, w)));
    }
    let (turns, _) = merge_turns(turns);
    Dialogue::new(raw.conversation_id, "tm2", goal.build(), turns)
}
