//! Source-corpus adapters into the unified schema.
//!
//! Each adapter takes one raw source document and returns a [`Dialogue`]
//! with its goal reconstructed and slot spans recovered. Spans that cannot
//! be verified against the utterance are dropped with a warning instead of
//! failing the record.

mod abcd;
mod multiwoz;
mod sgd;
mod spans;
mod tm2;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use spans::{locate_slot_spans, SpanMatch};

use crate::corpus::{Dialogue, Goal, Role, SlotSpan, SubGoal, Turn};
use crate::text::{char_len, char_slice};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Sgd,
    Tm2,
    Abcd,
    Emowoz,
    Spokenwoz,
    Generic,
}

impl Source {
    pub const ALL: [Source; 6] = [
        Source::Sgd,
        Source::Tm2,
        Source::Abcd,
        Source::Emowoz,
        Source::Spokenwoz,
        Source::Generic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Source::Sgd => "sgd",
            Source::Tm2 => "tm2",
            Source::Abcd => "abcd",
            Source::Emowoz => "emowoz",
            Source::Spokenwoz => "spokenwoz",
            Source::Generic => "generic",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        Source::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or(Error::UnknownSource(s))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceRecord {
    pub source: Source,
    pub raw: serde_json::Value,
}

impl SourceRecord {
    pub fn new(source: &str, raw: serde_json::Value) -> Result<Self> {
        Ok(SourceRecord {
            source: source.parse()?,
            raw,
        })
    }
}

/// A recoverable problem found while adapting one record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestWarning {
    pub dialogue_id: String,
    pub turn: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adapted {
    pub dialogue: Dialogue,
    pub warnings: Vec<IngestWarning>,
}

pub fn adapt(rec: &SourceRecord) -> Result<Adapted> {
    let mut w = Warnings::default();
    let dialogue = match rec.source {
        Source::Sgd => sgd::adapt(parse(rec)?, &mut w),
        Source::Tm2 => tm2::adapt(parse(rec)?, &mut w),
        Source::Abcd => abcd::adapt(parse(rec)?, &mut w)?,
        Source::Emowoz => multiwoz::adapt(parse(rec)?, Source::Emowoz, &mut w),
        Source::Spokenwoz => multiwoz::adapt(parse(rec)?, Source::Spokenwoz, &mut w),
        Source::Generic => parse::<Dialogue>(rec)?,
    };
    let warnings = w
        .0
        .into_iter()
        .map(|(turn, message)| IngestWarning {
            dialogue_id: dialogue.dialogue_id.clone(),
            turn,
            message,
        })
        .collect();
    Ok(Adapted { dialogue, warnings })
}

fn parse<T: DeserializeOwned>(rec: &SourceRecord) -> Result<T> {
    T::deserialize(&rec.raw).map_err(|e| Error::InvalidRecord {
        source_name: rec.source.to_string(),
        reason: e.to_string(),
    })
}

#[derive(Debug, Default)]
pub(crate) struct Warnings(Vec<(Option<usize>, String)>);

impl Warnings {
    pub(crate) fn push(&mut self, turn: Option<usize>, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("ingest: {msg}");
        self.0.push((turn, msg));
    }
}

/// A span is kept only if it lies inside `text` and, when a value is given,
/// slices to exactly that value.
pub(crate) fn checked_span(
    text: &str,
    slot: &str,
    start: usize,
    end: usize,
    value: Option<&str>,
    turn: usize,
    w: &mut Warnings,
) -> Option<SlotSpan> {
    if start >= end || end > char_len(text) {
        w.push(Some(turn), format!("span {slot} [{start}, {end}) outside the utterance"));
        return None;
    }
    let got = char_slice(text, start, end).unwrap_or_default();
    if let Some(v) = value {
        if got != v {
            w.push(Some(turn), format!("span {slot} reads `{got}`, annotated `{v}`"));
            return None;
        }
    }
    Some(SlotSpan {
        slot: slot.to_string(),
        start,
        end,
    })
}

/// Drops overlapping spans (later ones lose) and sorts by start.
pub(crate) fn tidy_spans(mut spans: Vec<SlotSpan>, turn: usize, w: &mut Warnings) -> Vec<SlotSpan> {
    let mut out: Vec<SlotSpan> = Vec::new();
    spans.dedup();
    for s in spans {
        if out.iter().any(|o| s.start < o.end && o.start < s.end) {
            if !out.contains(&s) {
                w.push(Some(turn), format!("span {} [{}, {}) overlaps another", s.slot, s.start, s.end));
            }
            continue;
        }
        out.push(s);
    }
    out.sort_by_key(|s| s.start);
    out
}

/// A turn before consecutive same-speaker turns are merged.
#[derive(Debug, Clone)]
pub(crate) struct RawTurn {
    pub role: Role,
    pub text: String,
    pub spans: Vec<SlotSpan>,
    pub extra: Turn,
}

impl RawTurn {
    pub(crate) fn new(role: Role, text: impl Into<String>, spans: Vec<SlotSpan>) -> Self {
        let text = text.into();
        RawTurn {
            extra: Turn::new(role, text.clone()),
            role,
            text,
            spans,
        }
    }
}

/// Joins consecutive turns by the same speaker with a space, shifting spans.
/// Returns the turns and, for each raw turn, the index it landed at.
pub(crate) fn merge_turns(raw: Vec<RawTurn>) -> (Vec<Turn>, Vec<usize>) {
    let mut out: Vec<Turn> = Vec::new();
    let mut landed = Vec::with_capacity(raw.len());
    for r in raw {
        let text = r.text.trim().to_string();
        let lead = char_len(&r.text) - char_len(r.text.trim_start());
        let shift_spans = |base: usize| {
            r.spans
                .iter()
                .filter_map(|s| {
                    let (a, b) = (s.start.checked_sub(lead)?, s.end.checked_sub(lead)?);
                    (b <= char_len(&text)).then(|| SlotSpan {
                        slot: s.slot.clone(),
                        start: a + base,
                        end: b + base,
                    })
                })
                .collect::<Vec<_>>()
        };
        match out.last_mut() {
            Some(prev) if prev.role == r.role => {
                let base = char_len(&prev.text) + 1;
                prev.text = format!("{} {text}", prev.text);
                prev.tagged = None;
                prev.slot_spans.extend(shift_spans(base));
                if prev.emotion.is_none() {
                    prev.emotion = r.extra.emotion;
                }
            }
            _ => {
                let mut t = r.extra.clone();
                t.role = r.role;
                t.slot_spans = shift_spans(0);
                t.text = text;
                t.tagged = None;
                out.push(t);
            }
        }
        landed.push(out.len() - 1);
    }
    (out, landed)
}

type GoalPart = (BTreeMap<String, String>, BTreeSet<String>);

/// Accumulated constraints and requests keyed by `(domain, intent)`.
#[derive(Debug, Default)]
pub(crate) struct GoalBuilder {
    order: Vec<(String, String)>,
    parts: BTreeMap<(String, String), GoalPart>,
}

impl GoalBuilder {
    fn entry(&mut self, domain: &str, intent: &str) -> &mut GoalPart {
        let key = (domain.to_string(), intent.to_string());
        if !self.parts.contains_key(&key) {
            self.order.push(key.clone());
        }
        self.parts.entry(key).or_default()
    }

    pub(crate) fn touch(&mut self, domain: &str, intent: &str) {
        self.entry(domain, intent);
    }

    /// First value seen for a slot wins.
    pub(crate) fn constraint(&mut self, domain: &str, intent: &str, slot: &str, value: &str) {
        if slot.is_empty() || value.is_empty() {
            return;
        }
        let e = self.entry(domain, intent);
        e.1.remove(slot);
        e.0.entry(slot.to_string()).or_insert_with(|| value.to_string());
    }

    pub(crate) fn request(&mut self, domain: &str, intent: &str, slot: &str) {
        if slot.is_empty() {
            return;
        }
        let e = self.entry(domain, intent);
        if !e.0.contains_key(slot) {
            e.1.insert(slot.to_string());
        }
    }

    pub(crate) fn sub_goals(mut self) -> Vec<SubGoal> {
        self.order
            .iter()
            .map(|k| {
                let (constraints, requests) = self.parts.remove(k).unwrap_or_default();
                SubGoal {
                    domain: k.0.clone(),
                    intent: k.1.clone(),
                    constraints,
                    requests,
                }
            })
            .collect()
    }

    /// Sub-goals plus a templated goal text.
    pub(crate) fn build(self) -> Goal {
        let sub_goals = self.sub_goals();
        Goal {
            text: template_goal_text(&sub_goals),
            sub_goals,
        }
    }
}

/// `ReserveRestaurant` and `phone_number` become `reserve restaurant` and `phone number`.
fn readable(s: &str) -> String {
    let mut out = String::new();
    let mut prev_lower = false;
    for c in s.chars() {
        if c == '_' || c == '-' {
            out.push(' ');
            prev_lower = false;
            continue;
        }
        if c.is_uppercase() && prev_lower {
            out.push(' ');
        }
        prev_lower = c.is_lowercase() || c.is_ascii_digit();
        out.extend(c.to_lowercase());
    }
    out
}

/// Fixed English skeleton for sources without goal text.
pub fn template_goal_text(sub_goals: &[SubGoal]) -> String {
    let mut parts = Vec::new();
    for sg in sub_goals {
        let mut s = format!("You want to {} in the {} domain.", readable(&sg.intent), readable(&sg.domain));
        if !sg.constraints.is_empty() {
            let cs: Vec<String> = sg
                .constraints
                .iter()
                .map(|(k, v)| format!("{} is {v}", readable(k)))
                .collect();
            s.push_str(&format!(" Make sure the {}.", cs.join(" and the ")));
        }
        if !sg.requests.is_empty() {
            let rs: Vec<String> = sg.requests.iter().map(|r| readable(r)).collect();
            s.push_str(&format!(" Ask for the {}.", rs.join(" and the ")));
        }
        parts.push(s);
    }
    parts.join(" ")
}
