use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::speakers::SpeakerProfile;

/// Literal token closing a truncated assistant turn.
pub const BARGEIN_TAG: &str = "<bargein>";

pub type BeliefState = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

impl Role {
    pub fn other(self) -> Role {
        match self {
            Role::User => Role::Assistant,
            Role::Assistant => Role::User,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubGoal {
    pub domain: String,
    pub intent: String,
    #[serde(default)]
    pub constraints: BTreeMap<String, String>,
    #[serde(default)]
    pub requests: BTreeSet<String>,
}

/// User goal: free text plus the structured sub-goals it was rendered from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "GoalRepr", into = "GoalRepr")]
pub struct Goal {
    pub text: String,
    pub sub_goals: Vec<SubGoal>,
}

#[derive(Serialize, Deserialize)]
struct GoalRepr {
    text: String,
    structured: StructuredRepr,
}

#[derive(Serialize, Deserialize)]
struct StructuredRepr {
    #[serde(default)]
    domains: Vec<String>,
    #[serde(default)]
    intents: Vec<String>,
    #[serde(default)]
    sub_goals: Vec<SubGoal>,
}

impl From<GoalRepr> for Goal {
    fn from(r: GoalRepr) -> Self {
        Goal {
            text: r.text,
            sub_goals: r.structured.sub_goals,
        }
    }
}

impl From<Goal> for GoalRepr {
    fn from(g: Goal) -> Self {
        let mut domains = Vec::new();
        let mut intents = Vec::new();
        for sg in &g.sub_goals {
            if !domains.contains(&sg.domain) {
                domains.push(sg.domain.clone());
            }
            if !intents.contains(&sg.intent) {
                intents.push(sg.intent.clone());
            }
        }
        GoalRepr {
            text: g.text,
            structured: StructuredRepr {
                domains,
                intents,
                sub_goals: g.sub_goals,
            },
        }
    }
}

/// Slot value location inside a turn's `text`, in character offsets, end exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSpan {
    pub slot: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EmotionLabel {
    Neutral = 0,
    Fearful = 1,
    Dissatisfied = 2,
    Apologetic = 3,
    Abusive = 4,
    Excited = 5,
    Satisfied = 6,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; 7] = [
        EmotionLabel::Neutral,
        EmotionLabel::Fearful,
        EmotionLabel::Dissatisfied,
        EmotionLabel::Apologetic,
        EmotionLabel::Abusive,
        EmotionLabel::Excited,
        EmotionLabel::Satisfied,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionLabel::Neutral => "neutral",
            EmotionLabel::Fearful => "fearful",
            EmotionLabel::Dissatisfied => "dissatisfied",
            EmotionLabel::Apologetic => "apologetic",
            EmotionLabel::Abusive => "abusive",
            EmotionLabel::Excited => "excited",
            EmotionLabel::Satisfied => "satisfied",
        }
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmotionLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown emotion `{s}`"))
    }
}

#[derive(Serialize, Deserialize)]
struct EmotionRepr {
    label: u8,
    #[serde(default)]
    name: Option<String>,
}

impl Serialize for EmotionLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        EmotionRepr {
            label: self.id(),
            name: Some(self.name().to_string()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EmotionLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = EmotionRepr::deserialize(d)?;
        let label = EmotionLabel::from_id(r.label)
            .ok_or_else(|| serde::de::Error::custom(format!("emotion id {} out of range", r.label)))?;
        if let Some(name) = r.name {
            if !name.eq_ignore_ascii_case(label.name()) {
                return Err(serde::de::Error::custom(format!(
                    "emotion id {} does not match name `{name}`",
                    r.label
                )));
            }
        }
        Ok(label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BargeInType {
    ErrorRecovery,
    Clarification,
    Efficiency,
}

impl BargeInType {
    pub const ALL: [BargeInType; 3] = [
        BargeInType::ErrorRecovery,
        BargeInType::Clarification,
        BargeInType::Efficiency,
    ];

    /// Assistant-state tag the type reacts to.
    pub fn state_tag(self) -> &'static str {
        match self {
            BargeInType::ErrorRecovery => "INCOHERENT",
            BargeInType::Clarification => "FAIL",
            BargeInType::Efficiency => "SUFFICIENT",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BargeInType::ErrorRecovery => "error_recovery",
            BargeInType::Clarification => "clarification",
            BargeInType::Efficiency => "efficiency",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BargeInStyle {
    Implicit,
    Raw,
    Interpreted,
}

impl BargeInStyle {
    pub const ALL: [BargeInStyle; 3] = [
        BargeInStyle::Implicit,
        BargeInStyle::Raw,
        BargeInStyle::Interpreted,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            BargeInStyle::Implicit => "IMPL",
            BargeInStyle::Raw => "RAW",
            BargeInStyle::Interpreted => "INTERP",
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.tag() == tag)
    }

    pub fn name(self) -> &'static str {
        match self {
            BargeInStyle::Implicit => "implicit",
            BargeInStyle::Raw => "raw",
            BargeInStyle::Interpreted => "interpreted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BargeInRepr", into = "BargeInRepr")]
pub struct BargeInMeta {
    pub kind: BargeInType,
    pub style: BargeInStyle,
    pub erroneous_slots: Option<BeliefState>,
    pub corrected_slots: Option<BeliefState>,
}

impl BargeInMeta {
    /// `INCOHERENT_RAW`-style subtype label.
    pub fn subtype(&self) -> String {
        format!("{}_{}", self.kind.state_tag(), self.style.tag())
    }
}

#[derive(Serialize, Deserialize)]
struct BargeInRepr {
    #[serde(rename = "type")]
    kind: BargeInType,
    subtype: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    erroneous_slots: Option<BeliefState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    corrected_slots: Option<BeliefState>,
}

impl TryFrom<BargeInRepr> for BargeInMeta {
    type Error = String;

    fn try_from(r: BargeInRepr) -> Result<Self, Self::Error> {
        let style = r
            .subtype
            .rsplit('_')
            .next()
            .and_then(BargeInStyle::from_tag)
            .ok_or_else(|| format!("unknown barge-in subtype `{}`", r.subtype))?;
        Ok(BargeInMeta {
            kind: r.kind,
            style,
            erroneous_slots: r.erroneous_slots,
            corrected_slots: r.corrected_slots,
        })
    }
}

impl From<BargeInMeta> for BargeInRepr {
    fn from(m: BargeInMeta) -> Self {
        BargeInRepr {
            subtype: m.subtype(),
            kind: m.kind,
            erroneous_slots: m.erroneous_slots,
            corrected_slots: m.corrected_slots,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DisfluencyType {
    FP,
    DM,
    EDIT,
    REP,
    COR,
    RST,
}

impl DisfluencyType {
    pub const ALL: [DisfluencyType; 6] = [
        DisfluencyType::FP,
        DisfluencyType::DM,
        DisfluencyType::EDIT,
        DisfluencyType::REP,
        DisfluencyType::COR,
        DisfluencyType::RST,
    ];

    pub fn marker(self) -> &'static str {
        match self {
            DisfluencyType::FP => "[FP]",
            DisfluencyType::DM => "[DM]",
            DisfluencyType::EDIT => "[EDIT]",
            DisfluencyType::REP => "[REP]",
            DisfluencyType::COR => "[COR]",
            DisfluencyType::RST => "[RST]",
        }
    }

    pub fn from_marker(m: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.marker() == m)
    }

    /// Types whose insertion is recorded exactly and can be undone.
    pub fn is_rule_based(self) -> bool {
        matches!(
            self,
            DisfluencyType::FP | DisfluencyType::DM | DisfluencyType::EDIT | DisfluencyType::REP
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisfluencyMeta {
    #[serde(rename = "type")]
    pub kind: DisfluencyType,
    /// Word index of the target word in the pre-injection text.
    pub position: usize,
    /// Exact inserted material (filler, repeated unit, reparandum or fragment).
    #[serde(alias = "repeated_unit")]
    pub inserted_span: String,
    /// Final slot value a correction lands on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_value: Option<String>,
    /// Wrong value spoken before a correction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wrong_value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossTurnMeta {
    pub slot_name: String,
    pub chunk_index: usize,
    pub chunk_text: String,
    #[serde(default)]
    pub is_error: bool,
    /// Set on the user turn that re-dictates a previously corrupted chunk.
    #[serde(default)]
    pub is_correction: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrected_in_turn: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    #[serde(default)]
    pub index: usize,
    pub role: Role,
    pub text: String,
    /// Surface string with inline markers; absent when identical to `text`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tagged: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slot_spans: Vec<SlotSpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotion: Option<EmotionLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bargein: Option<BargeInMeta>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub disfluency: Vec<DisfluencyMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossturn: Option<CrossTurnMeta>,
    #[serde(default, rename = "audio_path", skip_serializing_if = "Option::is_none")]
    pub audio_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

impl Turn {
    pub fn new(role: Role, text: impl Into<String>) -> Self {
        Turn {
            index: 0,
            role,
            text: text.into(),
            tagged: None,
            slot_spans: Vec::new(),
            emotion: None,
            bargein: None,
            disfluency: Vec::new(),
            crossturn: None,
            audio_ref: None,
            duration_s: None,
        }
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self::new(Role::User, text)
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self::new(Role::Assistant, text)
    }

    pub fn with_span(mut self, slot: &str, start: usize, end: usize) -> Self {
        self.slot_spans.push(SlotSpan {
            slot: slot.to_string(),
            start,
            end,
        });
        self
    }

    pub fn tagged(&self) -> &str {
        self.tagged.as_deref().unwrap_or(&self.text)
    }

    pub fn is_user(&self) -> bool {
        self.role == Role::User
    }

    /// Value text under a span, if the span is in range.
    pub fn span_text(&self, span: &SlotSpan) -> Option<&str> {
        crate::text::char_slice(&self.text, span.start, span.end)
    }

    /// Slot-name → surface value for every in-range span.
    pub fn slot_values(&self) -> Vec<(String, String)> {
        self.slot_spans
            .iter()
            .filter_map(|s| Some((s.slot.clone(), self.span_text(s)?.to_string())))
            .collect()
    }

    /// True for user turns produced by chunked dictation.
    pub fn is_segment(&self) -> bool {
        self.is_user() && self.crossturn.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dialogue {
    pub dialogue_id: String,
    pub source: String,
    pub goal: Goal,
    pub turns: Vec<Turn>,
    #[serde(default, rename = "speaker", skip_serializing_if = "Option::is_none")]
    pub user_speaker: Option<SpeakerProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assistant_speaker: Option<SpeakerProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_per_turn: Option<BTreeMap<usize, BeliefState>>,
}

impl Dialogue {
    pub fn new(id: impl Into<String>, source: impl Into<String>, goal: Goal, turns: Vec<Turn>) -> Self {
        let mut d = Dialogue {
            dialogue_id: id.into(),
            source: source.into(),
            goal,
            turns,
            user_speaker: None,
            assistant_speaker: None,
            state_per_turn: None,
        };
        d.renumber();
        d
    }

    pub fn renumber(&mut self) {
        for (i, t) in self.turns.iter_mut().enumerate() {
            t.index = i;
        }
    }

    /// Replaces `turns[range]` with `replacement`, keeping every stored turn
    /// reference (belief-state keys, correction pointers) pointed at the same turn.
    ///
    /// References into the replaced range move to the last replacement turn.
    /// `corrected_in_turn` values inside `replacement` must be relative to
    /// `range.start`.
    pub fn splice(&mut self, range: std::ops::Range<usize>, replacement: Vec<Turn>) {
        let start = range.start;
        let end = range.end;
        let added = replacement.len();
        let remap = |i: usize| -> usize {
            if i < start {
                i
            } else if i < end {
                start + added.saturating_sub(1)
            } else {
                i + added - (end - start)
            }
        };

        for t in self.turns.iter_mut() {
            if let Some(ct) = t.crossturn.as_mut() {
                ct.corrected_in_turn = ct.corrected_in_turn.map(remap);
            }
        }
        if let Some(states) = self.state_per_turn.take() {
            let mut moved = BTreeMap::new();
            for (k, v) in states {
                moved.insert(remap(k), v);
            }
            self.state_per_turn = Some(moved);
        }

        let replacement = replacement.into_iter().map(|mut t| {
            if let Some(ct) = t.crossturn.as_mut() {
                ct.corrected_in_turn = ct.corrected_in_turn.map(|r| r + start);
            }
            t
        });
        self.turns.splice(range, replacement);
        self.renumber();
    }

    /// Most recent belief state at or before `turn`.
    pub fn state_at(&self, turn: usize) -> Option<&BeliefState> {
        self.state_per_turn
            .as_ref()?
            .range(..=turn)
            .next_back()
            .map(|(_, s)| s)
    }

    pub fn user_turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| t.is_user())
    }
}
