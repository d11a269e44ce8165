//! MultiWOZ-format records: EmoWOZ and SpokenWOZ.
//!
//! Goals are taken from the record's goal annotation. Spans come from
//! `span_info` word positions, checked against the annotated value; when a
//! position does not reproduce the value, the value is matched directly.
//! SpokenWOZ records without `span_info` derive spans from `dialog_act`
//! values, and their system-side `metadata` becomes the per-turn state.
//! EmoWOZ emotion labels are kept as given.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::Deserialize;
use serde_json::Value;

use super::{checked_span, locate_slot_spans, merge_turns, tidy_spans, RawTurn, Source, Warnings};
use crate::corpus::{BeliefState, Dialogue, EmotionLabel, Goal, Role, SlotSpan, SubGoal};
use crate::text::{is_punct, words};

#[derive(Debug, Deserialize)]
pub(crate) struct WozDialogue {
    dialogue_id: String,
    goal: BTreeMap<String, Value>,
    log: Vec<WozTurn>,
}

#[derive(Debug, Deserialize)]
struct WozTurn {
    text: String,
    #[serde(default)]
    span_info: Vec<(String, String, Value, usize, usize)>,
    #[serde(default)]
    dialog_act: BTreeMap<String, Vec<(String, Value)>>,
    #[serde(default)]
    metadata: Option<BTreeMap<String, Value>>,
    #[serde(default)]
    emotion: Option<Value>,
}

static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^>]+>").unwrap());
const EMPTY_VALUES: &[&str] = &["", "not mentioned", "none", "dontcare", "?"];

fn text_of(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn goal_message(v: Option<&Value>) -> String {
    let raw = match v {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Array(xs)) => xs.iter().filter_map(text_of).collect::<Vec<_>>().join(" "),
        _ => String::new(),
    };
    TAG.replace_all(&raw, "").split_whitespace().collect::<Vec<_>>().join(" ")
}

fn string_map(v: Option<&Value>) -> BTreeMap<String, String> {
    let Some(Value::Object(m)) = v else {
        return BTreeMap::new();
    };
    m.iter()
        .filter_map(|(k, v)| Some((k.clone(), text_of(v)?)))
        .filter(|(_, v)| !v.is_empty())
        .collect()
}

pub(crate) fn woz_goal(goal: &BTreeMap<String, Value>) -> Goal {
    let mut sub_goals = Vec::new();
    for (domain, body) in goal {
        let Value::Object(body) = body else {
            continue;
        };
        let info = string_map(body.get("info"));
        let book = string_map(body.get("book"));
        let reqt: Vec<String> = match body.get("reqt") {
            Some(Value::Array(xs)) => xs.iter().filter_map(text_of).collect(),
            Some(Value::Object(m)) => m.keys().cloned().collect(),
            _ => Vec::new(),
        };
        if info.is_empty() && book.is_empty() && reqt.is_empty() {
            continue;
        }
        let intent = match (info.is_empty() && reqt.is_empty(), book.is_empty()) {
            (false, false) => "find_and_book",
            (true, false) => "book",
            _ => "find",
        };
        let mut constraints = info;
        constraints.extend(book);
        let requests = reqt.into_iter().filter(|r| !constraints.contains_key(r)).collect();
        sub_goals.push(SubGoal {
            domain: domain.clone(),
            intent: intent.into(),
            constraints,
            requests,
        });
    }
    let mut text = goal_message(goal.get("message"));
    if text.is_empty() {
        text = super::template_goal_text(&sub_goals);
    }
    Goal { text, sub_goals }
}

/// `Restaurant-Inform` + `Food` → `restaurant-food`.
fn slot_name(act: &str, slot: &str) -> String {
    let domain = act.split('-').next().unwrap_or(act).to_lowercase();
    format!("{domain}-{}", slot.to_lowercase())
}

fn word_span(text: &str, start: usize, end: usize) -> Option<(usize, usize)> {
    let ws = words(text);
    let (a, b) = (ws.get(start)?, ws.get(end)?);
    let tail = b.text.chars().rev().take_while(|c| is_punct(*c)).count();
    Some((a.start, b.end - tail))
}

fn spans_for(t: &WozTurn, source: Source, turn: usize, w: &mut Warnings) -> Vec<SlotSpan> {
    let mut spans = Vec::new();
    let mut fallback = Vec::new();
    for (act, slot, value, ws, we) in &t.span_info {
        let Some(value) = text_of(value) else {
            continue;
        };
        let name = slot_name(act, slot);
        let hit = word_span(&t.text, *ws, *we)
            .filter(|&(a, b)| crate::text::char_slice(&t.text, a, b) == Some(value.as_str()))
            .and_then(|(a, b)| checked_span(&t.text, &name, a, b, Some(&value), turn, w));
        match hit {
            Some(s) => spans.push(s),
            None => fallback.push((name, value)),
        }
    }
    if t.span_info.is_empty() && source == Source::Spokenwoz {
        for (act, pairs) in &t.dialog_act {
            for (slot, value) in pairs {
                if let Some(v) = text_of(value).filter(|v| !EMPTY_VALUES.contains(&v.as_str())) {
                    fallback.push((slot_name(act, slot), v));
                }
            }
        }
    }
    let m = locate_slot_spans(&t.text, &fallback);
    for (slot, value) in m.unmatched {
        w.push(Some(turn), format!("value `{value}` for {slot} not found in the utterance"));
    }
    spans.extend(m.spans);
    spans
}

fn emotion_of(v: &Value) -> Option<EmotionLabel> {
    match v {
        Value::Number(n) => n.as_u64().and_then(|n| u8::try_from(n).ok()).and_then(EmotionLabel::from_id),
        Value::Object(m) => m.get("emotion").and_then(emotion_of),
        Value::Array(xs) => xs.first().and_then(emotion_of),
        _ => None,
    }
}

/// `{domain: {semi: {...}, book: {...}}}` flattened to `domain-slot` pairs.
fn flatten_state(meta: &BTreeMap<String, Value>) -> BeliefState {
    let mut out = BeliefState::new();
    for (domain, body) in meta {
        let Value::Object(parts) = body else {
            continue;
        };
        for part in parts.values() {
            let Value::Object(slots) = part else {
                continue;
            };
            for (slot, v) in slots {
                if let Some(v) = text_of(v).filter(|v| !EMPTY_VALUES.contains(&v.as_str())) {
                    out.insert(format!("{domain}-{slot}"), v);
                }
            }
        }
    }
    out
}

pub(crate) fn adapt(raw: WozDialogue, source: Source, w: &mut Warnings) -> Dialogue {
    let goal = woz_goal(&raw.goal);
    let mut turns = Vec::with_capacity(raw.log.len());
    let mut states: Vec<(usize, BeliefState)> = Vec::new();
    for (i, t) in raw.log.iter().enumerate() {
        let role = if i % 2 == 0 { Role::User } else { Role::Assistant };
        let spans = tidy_spans(spans_for(t, source, i, w), i, w);
        let mut rt = RawTurn::new(role, t.text.clone(), spans);
        if role == Role::User && source == Source::Emowoz {
            rt.extra.emotion = t.emotion.as_ref().and_then(emotion_of);
        }
        if role == Role::Assistant && source == Source::Spokenwoz {
            if let Some(m) = &t.metadata {
                states.push((i - 1, flatten_state(m)));
            }
        }
        turns.push(rt);
    }
    let (turns, landed) = merge_turns(turns);
    let mut d = Dialogue::new(raw.dialogue_id, source.name(), goal, turns);
    if !states.is_empty() {
        d.state_per_turn = Some(states.into_iter().map(|(i, s)| (landed[i], s)).collect());
    }
    d
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::super::{adapt as adapt_record, SourceRecord};
    use super::*;
    use crate::text::char_slice;

    fn record() -> serde_json::Value {
        json!({
            "dialogue_id": "MUL0001",
            "goal": {
                "message": ["You are looking for a <span class='emphasis'>cheap</span> restaurant.", "Ask for the phone."],
                "restaurant": {"info": {"pricerange": "cheap", "area": "north"}, "book": {"people": "2"}, "reqt": ["phone"]},
                "hotel": {},
                "topic": {"restaurant": true}
            },
            "log": [
                {"text": "I want a cheap place in the north.",
                 "span_info": [["Restaurant-Inform", "Price", "cheap", 3, 3], ["Restaurant-Inform", "Area", "north", 7, 7]],
                 "emotion": [{"emotion": 5}]},
                {"text": "Royal Spice is cheap.", "span_info": [], "metadata": {
                    "restaurant": {"semi": {"pricerange": "cheap", "area": "north", "food": "not mentioned"}, "book": {"people": ""}}
                }},
                {"text": "Book for 2 please.", "span_info": [["Restaurant-Inform", "People", "2", 9, 9]],
                 "dialog_act": {"Restaurant-Inform": [["People", "2"]]}, "emotion": 0},
                {"text": "Done.", "metadata": {"restaurant": {"semi": {"pricerange": "cheap"}, "book": {"people": "2"}}}}
            ]
        })
    }

    #[test]
    fn emowoz_goal_spans_emotions() {
        let a = adapt_record(&SourceRecord::new("emowoz", record()).unwrap()).unwrap();
        let d = a.dialogue;
        assert_eq!(d.goal.text, "You are looking for a cheap restaurant. Ask for the phone.");
        assert_eq!(d.goal.sub_goals.len(), 1);
        let sg = &d.goal.sub_goals[0];
        assert_eq!(sg.intent, "find_and_book");
        assert_eq!(sg.constraints.len(), 3);
        let t0 = &d.turns[0];
        let vals: Vec<&str> = t0.slot_spans.iter().filter_map(|s| char_slice(&t0.text, s.start, s.end)).collect();
        assert_eq!(vals, ["cheap", "north"]);
        assert_eq!(t0.slot_spans[1].slot, "restaurant-area");
        // word 9 does not exist; the value is matched directly
        let t2 = &d.turns[2];
        assert_eq!(char_slice(&t2.text, t2.slot_spans[0].start, t2.slot_spans[0].end), Some("2"));
        assert_eq!(d.turns[0].emotion, Some(EmotionLabel::Excited));
        assert_eq!(d.turns[2].emotion, Some(EmotionLabel::Neutral));
        assert!(d.state_per_turn.is_none());
    }

    #[test]
    fn spokenwoz_states_and_act_spans() {
        let mut r = record();
        r["log"][2]["span_info"] = json!([]);
        let d = adapt_record(&SourceRecord::new("spokenwoz", r).unwrap()).unwrap().dialogue;
        assert!(d.turns.iter().all(|t| t.emotion.is_none()));
        let states = d.state_per_turn.unwrap();
        assert_eq!(states[&0].len(), 2);
        assert_eq!(states[&2]["restaurant-people"], "2");
        let t2 = &d.turns[2];
        assert_eq!(t2.slot_spans[0].slot, "restaurant-people");
    }
}
