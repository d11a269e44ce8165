use std::fmt;

use serde::Serialize;

use super::fluent::fluent_projection;
use super::model::{BargeInType, Dialogue, DisfluencyType, Role, BARGEIN_TAG};
use crate::text::{char_len, word_count};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    EmptyGoal,
    EmptySlotName,
    ConstraintRequestOverlap,
    IndexNotDense,
    SpanBounds,
    SpanOverlap,
    UserBargeInTag,
    TruncationWithoutTag,
    MisplacedBargeInTag,
    RolesNotAlternating,
    BargeInSlots,
    DisfluencyPosition,
    CorrectionValue,
    MalformedTags,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub turn: Option<usize>,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.turn {
            Some(t) => write!(f, "turn {t}: {:?}: {}", self.rule, self.detail),
            None => write!(f, "{:?}: {}", self.rule, self.detail),
        }
    }
}

/// Checks every schema invariant; an empty result means the dialogue is well formed.
pub fn validate_dialogue(d: &Dialogue) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |turn: Option<usize>, rule: Rule, detail: String| {
        out.push(Violation { turn, rule, detail })
    };

    if d.goal.sub_goals.is_empty() {
        push(None, Rule::EmptyGoal, "goal has no sub-goals".into());
    }
    for sg in &d.goal.sub_goals {
        if sg.constraints.keys().chain(sg.requests.iter()).any(|s| s.trim().is_empty()) {
            push(None, Rule::EmptySlotName, format!("empty slot name in {}/{}", sg.domain, sg.intent));
        }
        if let Some(dup) = sg.requests.iter().find(|r| sg.constraints.contains_key(*r)) {
            push(
                None,
                Rule::ConstraintRequestOverlap,
                format!("`{dup}` is both a constraint and a request"),
            );
        }
    }

    let mut prev_role: Option<Role> = None;
    for (i, t) in d.turns.iter().enumerate() {
        let at = Some(i);
        if t.index != i {
            push(at, Rule::IndexNotDense, format!("index {} at position {i}", t.index));
        }
        if prev_role == Some(t.role) {
            push(at, Rule::RolesNotAlternating, format!("two consecutive {:?} turns", t.role));
        }
        prev_role = Some(t.role);

        let len = char_len(&t.text);
        let mut spans: Vec<_> = t.slot_spans.iter().collect();
        for s in &spans {
            if s.slot.trim().is_empty() {
                push(at, Rule::EmptySlotName, "span with empty slot name".into());
            }
            if s.start >= s.end || s.end > len {
                push(
                    at,
                    Rule::SpanBounds,
                    format!("span {}..{} outside text of length {len}", s.start, s.end),
                );
            }
        }
        spans.sort_by_key(|s| (s.start, s.end));
        for w in spans.windows(2) {
            if w[1].start < w[0].end {
                push(
                    at,
                    Rule::SpanOverlap,
                    format!("`{}` overlaps `{}`", w[0].slot, w[1].slot),
                );
            }
        }

        let has_tag = t.text.contains(BARGEIN_TAG) || t.tagged().contains(BARGEIN_TAG);
        match t.role {
            Role::User if has_tag => {
                push(at, Rule::UserBargeInTag, "user turn contains <bargein>".into());
            }
            Role::Assistant => {
                let truncated = t.bargein.is_some();
                let ends = t.text.trim_end().ends_with(BARGEIN_TAG);
                let count = t.text.matches(BARGEIN_TAG).count();
                if truncated && !ends {
                    push(at, Rule::TruncationWithoutTag, "truncated turn must end with <bargein>".into());
                } else if has_tag && (!truncated || count > 1 || !ends) {
                    push(at, Rule::MisplacedBargeInTag, "<bargein> outside a truncation".into());
                }
            }
            _ => {}
        }

        if let Some(b) = &t.bargein {
            let is_er = b.kind == BargeInType::ErrorRecovery;
            match (&b.erroneous_slots, &b.corrected_slots) {
                (Some(e), Some(c)) if is_er => {
                    if !e.keys().eq(c.keys()) {
                        push(at, Rule::BargeInSlots, "erroneous/corrected slot names differ".into());
                    }
                }
                (None, None) if !is_er => {}
                _ => push(
                    at,
                    Rule::BargeInSlots,
                    "slot maps must be present exactly for error recovery".into(),
                ),
            }
        }

        if !t.disfluency.is_empty() || t.tagged.is_some() {
            let wc = word_count(t.tagged());
            for m in &t.disfluency {
                if m.position >= wc.max(1) {
                    push(
                        at,
                        Rule::DisfluencyPosition,
                        format!("{:?} position {} beyond {wc} words", m.kind, m.position),
                    );
                }
                if m.kind == DisfluencyType::COR
                    && (m.original_value.is_none() || m.wrong_value.is_none())
                {
                    push(at, Rule::CorrectionValue, "correction must record wrong and final values".into());
                }
            }
            if let Err(e) = fluent_projection(t) {
                push(at, Rule::MalformedTags, e.to_string());
            }
        }
    }
    out
}
