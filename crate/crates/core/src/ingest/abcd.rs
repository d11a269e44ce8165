//! Action-Based Conversations Dataset records.
//!
//! Each utterance has a delexicalized twin in which values are replaced by
//! typed placeholders like `<email>`. Aligning the literal text around the
//! placeholders against the original yields the value spans. Scenario values
//! not covered by a placeholder are then matched directly in customer turns.
//! The goal comes from the scenario: flow and subflow become domain and
//! intent, personal and order fields become constraints.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::Deserialize;
use serde_json::Value;

use super::{locate_slot_spans, merge_turns, tidy_spans, GoalBuilder, RawTurn, Warnings};
use crate::corpus::{Dialogue, Role, SlotSpan};
use crate::text::char_offset;
use crate::{Error, Result};

#[derive(Debug, Deserialize)]
pub(crate) struct AbcdDialogue {
    convo_id: Value,
    scenario: Scenario,
    original: Vec<(String, String)>,
    #[serde(default)]
    delexed: Vec<Delexed>,
}

#[derive(Debug, Deserialize)]
struct Scenario {
    flow: String,
    subflow: String,
    #[serde(default)]
    personal: BTreeMap<String, Value>,
    #[serde(default)]
    order: BTreeMap<String, Value>,
}

#[derive(Debug, Deserialize)]
struct Delexed {
    speaker: String,
    text: String,
}

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<([a-z_]+)>").unwrap());

/// Spans of `original` filled in for each placeholder of `delexed`.
pub(crate) fn align_placeholders(original: &str, delexed: &str) -> Option<Vec<SlotSpan>> {
    let mut pattern = String::from("^");
    let mut names = Vec::new();
    let mut last = 0;
    for c in PLACEHOLDER.captures_iter(delexed) {
        let m = c.get(0).unwrap();
        pattern.push_str(&regex::escape(&delexed[last..m.start()]));
        pattern.push_str("(.+?)");
        names.push(c[1].to_string());
        last = m.end();
    }
    if names.is_empty() {
        return Some(Vec::new());
    }
    pattern.push_str(&regex::escape(&delexed[last..]));
    pattern.push('$');
    let re = Regex::new(&pattern).ok()?;
    let caps = re.captures(original)?;
    Some(
        names
            .into_iter()
            .enumerate()
            .map(|(i, slot)| {
                let g = caps.get(i + 1).unwrap();
                SlotSpan {
                    slot,
                    start: char_offset(original, g.start()),
                    end: char_offset(original, g.end()),
                }
            })
            .collect(),
    )
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) if !s.is_empty() => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

pub(crate) fn adapt(raw: AbcdDialogue, w: &mut Warnings) -> Result<Dialogue> {
    let id = match &raw.convo_id {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => {
            return Err(Error::InvalidRecord {
                source_name: "abcd".into(),
                reason: format!("convo_id {other} is not a string or number"),
            })
        }
    };
    let id = if id.starts_with("abcd_") { id } else { format!("abcd_{id}") };

    let mut goal = GoalBuilder::default();
    let (domain, intent) = (raw.scenario.flow.as_str(), raw.scenario.subflow.as_str());
    goal.touch(domain, intent);
    let mut metadata = Vec::new();
    for (k, v) in raw.scenario.personal.iter().chain(&raw.scenario.order) {
        if let Some(s) = scalar(v) {
            goal.constraint(domain, intent, k, &s);
            metadata.push((k.clone(), s));
        }
    }

    let speakers: Vec<usize> = (0..raw.original.len())
        .filter(|&i| raw.original[i].0 != "action")
        .collect();
    let delexed: Vec<&Delexed> = raw.delexed.iter().filter(|d| d.speaker != "action").collect();
    let mut turns = Vec::new();
    for (k, &i) in speakers.iter().enumerate() {
        let (speaker, text) = &raw.original[i];
        let role = if speaker == "customer" { Role::User } else { Role::Assistant };
        let mut spans = match delexed.get(k) {
            Some(dx) => align_placeholders(text, &dx.text).unwrap_or_else(|| {
                w.push(Some(k), "delexicalized text does not align with the original");
                Vec::new()
            }),
            None => Vec::new(),
        };
        if role == Role::User {
            let pending: Vec<(String, String)> = metadata
                .iter()
                .filter(|(slot, _)| !spans.iter().any(|s| &s.slot == slot))
                .cloned()
                .collect();
            let mut masked = text.clone();
            for s in &spans {
                if let Some(r) = crate::text::byte_range(text, s.start, s.end) {
                    masked.replace_range(r, &"\u{0}".repeat(s.end - s.start));
                }
            }
            spans.extend(locate_slot_spans(&masked, &pending).spans);
        }
        turns.push(RawTurn::new(role, text.clone(), tidy_spans(spans, k, w)));
    }
    let (turns, _) = merge_turns(turns);
    Ok(Dialogue::new(id, "abcd", goal.build(), turns))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use serde_json::json;

    use super::super::{adapt as adapt_record, SourceRecord};
    use super::*;
    use crate::text::char_slice;

    #[test]
    fn placeholder_alignment() {
        let s = align_placeholders("my email is jo@x.com thanks", "my email is <email> thanks").unwrap();
        assert_eq!(s, vec![SlotSpan { slot: "email".into(), start: 12, end: 20 }]);
        assert!(align_placeholders("totally different", "my email is <email>").is_none());
        let s = align_placeholders("ids 12 and 34", "ids <order_id> and <zip_code>").unwrap();
        assert_eq!((s[0].start, s[0].end, s[1].start, s[1].end), (4, 6, 11, 13));
    }

    #[test]
    fn record() {
        let raw = json!({
            "convo_id": 10083,
            "scenario": {
                "flow": "account_access",
                "subflow": "recover_password",
                "personal": {"customer_name": "Joe Smith", "email": "jsmith@mail.com", "member_level": "gold"},
                "order": {}
            },
            "original": [
                ["agent", "Hi, how can I help?"],
                ["customer", "I forgot my password. I'm a gold member."],
                ["action", "pull up account"],
                ["agent", "What is your email?"],
                ["customer", "It is jsmith@mail.com"]
            ],
            "delexed": [
                {"speaker": "agent", "text": "Hi, how can I help?"},
                {"speaker": "customer", "text": "I forgot my password. I'm a gold member."},
                {"speaker": "action", "text": "pull up account"},
                {"speaker": "agent", "text": "What is your email?"},
                {"speaker": "customer", "text": "It is <email>"}
            ]
        });
        let a = adapt_record(&SourceRecord::new("abcd", raw).unwrap()).unwrap();
        let d = a.dialogue;
        assert_eq!(d.dialogue_id, "abcd_10083");
        assert_eq!(d.turns.len(), 4);
        let t = &d.turns[3];
        assert_eq!(char_slice(&t.text, t.slot_spans[0].start, t.slot_spans[0].end), Some("jsmith@mail.com"));
        let t = &d.turns[1];
        assert_eq!(t.slot_spans.len(), 1);
        assert_eq!(t.slot_spans[0].slot, "member_level");
        let sg = &d.goal.sub_goals[0];
        assert_eq!((sg.domain.as_str(), sg.intent.as_str()), ("account_access", "recover_password"));
        assert_eq!(sg.constraints.len(), 3);
    }

    proptest! {
        #[test]
        fn aligned_spans_slice_to_values(
            lits in prop::collection::vec("[a-z ]{1,8}", 3),
            vals in prop::collection::vec("[A-Za-z0-9@.]{1,10}", 2),
        ) {
            let original = format!("{}{}{}{}{}", lits[0], vals[0], lits[1], vals[1], lits[2]);
            let delexed = format!("{}<email>{}<order_id>{}", lits[0], lits[1], lits[2]);
            let spans = align_placeholders(&original, &delexed).unwrap();
            prop_assert_eq!(spans.len(), 2);
            for s in &spans {
                let v = char_slice(&original, s.start, s.end).unwrap();
                prop_assert!(!v.is_empty());
            }
            let rebuilt = format!(
                "{}<email>{}<order_id>{}",
                &original[..spans[0].start],
                &original[spans[0].end..spans[1].start],
                &original[spans[1].end..]
            );
            prop_assert_eq!(rebuilt, delexed);
        }
    }
}
