//! Schema-Guided Dialogue records.
//!
//! Spans come from each frame's `start`/`exclusive_end` character offsets.
//! The goal is rebuilt from the user-side dialogue state: each active intent
//! becomes a sub-goal holding the slot values and requested slots seen under it.

use std::collections::BTreeMap;

use serde::Deserialize;

use super::{checked_span, merge_turns, tidy_spans, GoalBuilder, RawTurn, Warnings};
use crate::corpus::{Dialogue, Role};

#[derive(Debug, Deserialize)]
pub(crate) struct SgdDialogue {
    dialogue_id: String,
    turns: Vec<SgdTurn>,
}

#[derive(Debug, Deserialize)]
struct SgdTurn {
    speaker: String,
    utterance: String,
    #[serde(default)]
    frames: Vec<SgdFrame>,
}

#[derive(Debug, Deserialize)]
struct SgdFrame {
    service: String,
    #[serde(default)]
    slots: Vec<SgdSlot>,
    #[serde(default)]
    state: Option<SgdState>,
}

#[derive(Debug, Deserialize)]
struct SgdSlot {
    slot: String,
    start: usize,
    exclusive_end: usize,
}

#[derive(Debug, Deserialize)]
struct SgdState {
    active_intent: String,
    #[serde(default)]
    requested_slots: Vec<String>,
    #[serde(default)]
    slot_values: BTreeMap<String, Vec<String>>,
}

/// `Restaurants_1` → `restaurants`.
pub(crate) fn domain_of(service: &str) -> String {
    service.split('_').next().unwrap_or(service).to_lowercase()
}

pub(crate) fn adapt(raw: SgdDialogue, w: &mut Warnings) -> Dialogue {
    let mut goal = GoalBuilder::default();
    let mut turns = Vec::with_capacity(raw.turns.len());
    for (i, t) in raw.turns.iter().enumerate() {
        let role = if t.speaker.eq_ignore_ascii_case("user") {
            Role::User
        } else {
            Role::Assistant
        };
        let mut spans = Vec::new();
        for f in &t.frames {
            for s in &f.slots {
                spans.extend(checked_span(&t.utterance, &s.slot, s.start, s.exclusive_end, None, i, w));
            }
            let Some(st) = f.state.as_ref().filter(|_| role == Role::User) else {
                continue;
            };
            if st.active_intent == "NONE" {
                continue;
            }
            let domain = domain_of(&f.service);
            goal.touch(&domain, &st.active_intent);
            for (slot, vals) in &st.slot_values {
                if let Some(v) = vals.first() {
                    goal.constraint(&domain, &st.active_intent, slot, v);
                }
            }
            for r in &st.requested_slots {
                goal.request(&domain, &st.active_intent, r);
            }
        }
        let spans = tidy_spans(spans, i, w);
        turns.push(RawTurn::new(role, t.utterance.clone(), spans));
    }
    let (turns, _) = merge_turns(turns);
    Dialogue::new(raw.dialogue_id, "sgd", goal.build(), turns)
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::super::{adapt as adapt_record, SourceRecord};
    use crate::corpus::validate_dialogue;
    use crate::text::char_slice;

    fn fixture() -> serde_json::Value {
        json!({
            "dialogue_id": "1_00000",
            "services": ["Restaurants_1"],
            "turns": [
                {
                    "speaker": "USER",
                    "utterance": "I want to eat in San Jose.",
                    "frames": [{
                        "service": "Restaurants_1",
                        "slots": [{"slot": "city", "start": 17, "exclusive_end": 25}],
                        "state": {"active_intent": "FindRestaurants", "requested_slots": [],
                                  "slot_values": {"city": ["San Jose"]}}
                    }]
                },
                {
                    "speaker": "SYSTEM",
                    "utterance": "What kind of food? I found Sakoon.",
                    "frames": [{"service": "Restaurants_1",
                                "slots": [{"slot": "restaurant_name", "start": 27, "exclusive_end": 33}]}]
                },
                {
                    "speaker": "USER",
                    "utterance": "Indian food. What is their phone number?",
                    "frames": [{
                        "service": "Restaurants_1",
                        "slots": [{"slot": "cuisine", "start": 0, "exclusive_end": 6}],
                        "state": {"active_intent": "FindRestaurants", "requested_slots": ["phone_number"],
                                  "slot_values": {"city": ["San Jose"], "cuisine": ["Indian"]}}
                    }]
                }
            ]
        })
    }

    #[test]
    fn spans_copied_and_goal_rebuilt() {
        let raw = fixture();
        let a = adapt_record(&SourceRecord::new("sgd", raw.clone()).unwrap()).unwrap();
        assert!(a.warnings.is_empty());
        let d = a.dialogue;
        assert_eq!(d.turns.len(), 3);
        for (t, rt) in d.turns.iter().zip(raw["turns"].as_array().unwrap()) {
            for (s, rs) in t.slot_spans.iter().zip(rt["frames"][0]["slots"].as_array().unwrap()) {
                assert_eq!(s.start as u64, rs["start"].as_u64().unwrap());
                assert_eq!(s.end as u64, rs["exclusive_end"].as_u64().unwrap());
            }
        }
        let values: Vec<&str> = d
            .turns
            .iter()
            .flat_map(|t| t.slot_spans.iter().filter_map(move |s| char_slice(&t.text, s.start, s.end)))
            .collect();
        assert_eq!(values, ["San Jose", "Sakoon", "Indian"]);
        let sg = &d.goal.sub_goals[0];
        assert_eq!((sg.domain.as_str(), sg.intent.as_str()), ("restaurants", "FindRestaurants"));
        assert_eq!(sg.constraints["cuisine"], "Indian");
        assert!(sg.requests.contains("phone_number"));
        assert!(validate_dialogue(&d).is_empty());
    }

    #[test]
    fn bad_offsets_dropped_with_warning() {
        let mut raw = fixture();
        raw["turns"][0]["frames"][0]["slots"][0]["exclusive_end"] = json!(99);
        let a = adapt_record(&SourceRecord::new("sgd", raw).unwrap()).unwrap();
        assert!(a.dialogue.turns[0].slot_spans.is_empty());
        assert_eq!(a.warnings.len(), 1);
        assert_eq!(a.warnings[0].turn, Some(0));
    }

    #[test]
    fn deterministic() {
        let r = SourceRecord::new("sgd", fixture()).unwrap();
        assert_eq!(adapt_record(&r).unwrap(), adapt_record(&r).unwrap());
    }
}
