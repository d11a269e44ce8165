//! Barge-in augmentation: candidate sampling, validity judgment, block
//! generation and splicing.
//!
//! A generated block always opens with the truncated assistant turn and
//! closes with an assistant turn. The closing turn is kept as
//! [`InsertionBlock::recovery`] but not spliced: the original assistant
//! response that follows the block plays that role, so roles keep alternating
//! and every original turn survives verbatim.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clients::{prompts, ChatClient, ChatRequest, ClientError, PromptKind};
use crate::corpus::{BargeInMeta, BargeInStyle, BargeInType, BeliefState, Dialogue, Role, Turn, BARGEIN_TAG};
use crate::ingest::locate_slot_spans;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BargeInConfig {
    pub sample_rate: f64,
    /// Number of preceding turns rendered as context in prompts.
    pub context_turns: usize,
}

impl Default for BargeInConfig {
    fn default() -> Self {
        BargeInConfig {
            sample_rate: 0.25,
            context_turns: 6,
        }
    }
}

impl BargeInConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(0.0..=1.0).contains(&self.sample_rate) {
            return Err(crate::Error::Config(format!(
                "barge-in sample_rate must be in [0, 1], got {}",
                self.sample_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    /// Index of the user turn the barge-in follows.
    pub turn_idx: usize,
    pub kind: BargeInType,
    pub style: BargeInStyle,
}

#[derive(Debug, Error, PartialEq)]
pub enum InsertionError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("generator declined the pattern")]
    NotApplicable,
    #[error("malformed block: {0}")]
    Format(String),
    #[error("candidate turn {0} is not followed by an assistant turn")]
    NoResponse(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsertionBlock {
    /// Truncated assistant turn, interruption, and any follow-up exchange.
    pub turns: Vec<Turn>,
    /// Final generated assistant turn, superseded by the original response.
    pub recovery: Turn,
    pub meta: BargeInMeta,
}

/// Selects each user turn with probability `sample_rate` and draws a uniform cell.
pub fn sample_candidates<R: Rng + ?Sized>(d: &Dialogue, cfg: &BargeInConfig, rng: &mut R) -> Vec<Candidate> {
    let mut out = Vec::new();
    for t in d.turns.iter().filter(|t| t.is_user()) {
        if rng.random_bool(cfg.sample_rate) {
            let kind = BargeInType::ALL[rng.random_range(0..3)];
            let style = BargeInStyle::ALL[rng.random_range(0..3)];
            out.push(Candidate {
                turn_idx: t.index,
                kind,
                style,
            });
        }
    }
    out
}

/// Belief state in force at `turn_idx`: the annotated state if the source has
/// one, otherwise every slot value spoken by the user so far.
pub fn current_state(d: &Dialogue, turn_idx: usize) -> BeliefState {
    if let Some(s) = d.state_at(turn_idx) {
        return s.clone();
    }
    let mut state = BeliefState::new();
    for t in d.turns[..=turn_idx.min(d.turns.len().saturating_sub(1))]
        .iter()
        .filter(|t| t.is_user())
    {
        for (k, v) in t.slot_values() {
            state.insert(k, v);
        }
    }
    state
}

fn render_turn(t: &Turn) -> String {
    let who = match t.role {
        Role::User => "User",
        Role::Assistant => "Assistant",
    };
    format!("[{who}]: {}", t.text)
}

fn prompt_vars(d: &Dialogue, c: &Candidate, state: &BeliefState, cfg: &BargeInConfig) -> BTreeMap<String, String> {
    let ctx_start = c.turn_idx.saturating_sub(cfg.context_turns);
    let context: Vec<String> = d.turns[ctx_start..c.turn_idx].iter().map(render_turn).collect();
    let user = &d.turns[c.turn_idx];
    let assistant = d.turns.get(c.turn_idx + 1).map(|t| t.text.as_str()).unwrap_or("");
    let state_json = serde_json::to_string(state).expect("string map");
    BTreeMap::from([
        (
            "context_str".to_string(),
            if context.is_empty() { "(none)".to_string() } else { context.join("\n") },
        ),
        (
            "current_exchange".to_string(),
            format!("\n{}\n[Assistant]: {assistant}", render_turn(user)),
        ),
        (
            "current_state".to_string(),
            serde_json::to_string_pretty(state).expect("string map"),
        ),
        ("bargein_type".to_string(), c.kind.name().to_string()),
        ("state_tag".to_string(), c.kind.state_tag().to_string()),
        ("style".to_string(), c.style.tag().to_string()),
        ("assistant_text".to_string(), assistant.to_string()),
        ("state_json".to_string(), state_json),
    ])
}

fn response_turn(d: &Dialogue, c: &Candidate) -> Result<(), InsertionError> {
    match d.turns.get(c.turn_idx + 1) {
        Some(t) if t.role == Role::Assistant && t.bargein.is_none() => Ok(()),
        _ => Err(InsertionError::NoResponse(c.turn_idx)),
    }
}

/// Asks the judge whether the assistant response supports the candidate's type.
pub fn judge_validity(
    d: &Dialogue,
    c: &Candidate,
    judge: &dyn ChatClient,
    cfg: &BargeInConfig,
) -> Result<bool, InsertionError> {
    response_turn(d, c)?;
    let state = current_state(d, c.turn_idx);
    let req = ChatRequest::from_template(PromptKind::BargeInJudge, prompts::BARGEIN_JUDGE, prompt_vars(d, c, &state, cfg))
        .with_temperature(0.0);
    let reply = judge.chat(&req)?;
    let head = reply
        .trim()
        .trim_start_matches(|ch: char| !ch.is_alphabetic())
        .to_ascii_lowercase();
    if head.starts_with("yes") {
        Ok(true)
    } else if head.starts_with("no") {
        Ok(false)
    } else {
        Err(ClientError::BadResponse(format!("judge answered `{}`", reply.trim())).into())
    }
}

/// Requests the block for `c` and checks it against the format contract.
pub fn generate_insertion(
    d: &Dialogue,
    c: &Candidate,
    state: &BeliefState,
    gen: &dyn ChatClient,
    cfg: &BargeInConfig,
) -> Result<InsertionBlock, InsertionError> {
    response_turn(d, c)?;
    let template = prompts::bargein_generate(c.kind, c.style);
    let req = ChatRequest::from_template(PromptKind::BargeInGenerate, &template, prompt_vars(d, c, state, cfg));
    let reply = gen.chat(&req)?;
    parse_block(&reply, c, state)
}

#[derive(Debug, Default)]
struct RawBlock {
    turns: Vec<(Role, String)>,
    erroneous: Option<BeliefState>,
    corrected: Option<BeliefState>,
}

fn flatten(prefix: &str, v: &serde_json::Value, out: &mut BeliefState) {
    match v {
        serde_json::Value::Object(m) => {
            for (k, v) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        serde_json::Value::String(s) => {
            out.insert(prefix.to_string(), s.clone());
        }
        serde_json::Value::Null => {}
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}

fn parse_slots(s: &str) -> Result<BeliefState, InsertionError> {
    let v: serde_json::Value =
        serde_json::from_str(s.trim()).map_err(|e| InsertionError::Format(format!("slot map: {e}")))?;
    if !v.is_object() {
        return Err(InsertionError::Format("slot map is not an object".into()));
    }
    let mut out = BeliefState::new();
    flatten("", &v, &mut out);
    Ok(out)
}

fn strip_label<'a>(line: &'a str, label: &str) -> Option<&'a str> {
    let l = line.trim_start_matches(['-', '*', ' ']);
    for form in [format!("[{label}]:"), format!("{label}:")] {
        if let Some(rest) = l.strip_prefix(form.as_str()) {
            return Some(rest.trim());
        }
    }
    None
}

fn strip_ci<'a>(line: &'a str, prefix: &str) -> Option<&'a str> {
    let head = line.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix).then(|| line[prefix.len()..].trim())
}

fn parse_raw(reply: &str) -> Result<RawBlock, InsertionError> {
    if reply.to_ascii_uppercase().contains("NOT APPLICABLE") {
        return Err(InsertionError::NotApplicable);
    }
    let mut b = RawBlock::default();
    for line in reply.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let Some(rest) = strip_label(line, "Assistant") {
            b.turns.push((Role::Assistant, rest.to_string()));
        } else if let Some(rest) = strip_label(line, "User") {
            b.turns.push((Role::User, rest.to_string()));
        } else if let Some(rest) = strip_ci(line, "Erroneous slots:").or_else(|| strip_ci(line, "erroneous_slots:")) {
            b.erroneous = Some(parse_slots(rest)?);
        } else if let Some(rest) = strip_ci(line, "Corrected slots:").or_else(|| strip_ci(line, "corrected_slots:")) {
            b.corrected = Some(parse_slots(rest)?);
        } else if let Some((_, text)) = b.turns.last_mut() {
            if b.erroneous.is_none() && b.corrected.is_none() {
                text.push(' ');
                text.push_str(line);
            }
        }
    }
    Ok(b)
}

fn parse_block(reply: &str, c: &Candidate, state: &BeliefState) -> Result<InsertionBlock, InsertionError> {
    let raw = parse_raw(reply)?;
    let fmt = |m: &str| Err(InsertionError::Format(m.to_string()));
    if raw.turns.len() < 3 {
        return fmt("a block needs at least three turns");
    }
    if raw.turns.windows(2).any(|w| w[0].0 == w[1].0) {
        return fmt("roles do not alternate");
    }
    let (first_role, first_text) = &raw.turns[0];
    if *first_role != Role::Assistant || !first_text.ends_with(BARGEIN_TAG) {
        return fmt("block must open with an assistant turn ending in <bargein>");
    }
    if first_text.matches(BARGEIN_TAG).count() != 1 || raw.turns[1..].iter().any(|(_, t)| t.contains(BARGEIN_TAG)) {
        return fmt("<bargein> may only close the truncated turn");
    }
    if raw.turns.last().map(|t| t.0) != Some(Role::Assistant) {
        return fmt("block must close with an assistant turn");
    }
    if raw.turns.iter().any(|(_, t)| t.trim().is_empty()) {
        return fmt("empty turn");
    }

    let (erroneous_slots, corrected_slots) = if c.kind == BargeInType::ErrorRecovery {
        let (Some(e), Some(k)) = (raw.erroneous, raw.corrected) else {
            return fmt("error recovery needs erroneous and corrected slots");
        };
        if e.is_empty() || !e.keys().eq(k.keys()) {
            return fmt("erroneous and corrected slots must name the same slots");
        }
        for (slot, v) in &k {
            if state.get(slot) != Some(v) {
                return Err(InsertionError::Format(format!(
                    "corrected {slot} = `{v}` disagrees with the dialogue state"
                )));
            }
            if e.get(slot) == Some(v) {
                return Err(InsertionError::Format(format!("erroneous {slot} equals the correct value")));
            }
        }
        (Some(e), Some(k))
    } else {
        (None, None)
    };
    let meta = BargeInMeta {
        kind: c.kind,
        style: c.style,
        erroneous_slots,
        corrected_slots,
    };

    let mut turns: Vec<Turn> = raw
        .turns
        .into_iter()
        .map(|(role, text)| Turn::new(role, text))
        .collect();
    let recovery = turns.pop().expect("at least three turns");
    turns[0].bargein = Some(meta.clone());
    turns[1].bargein = Some(meta.clone());
    if let Some(k) = &meta.corrected_slots {
        let pairs: Vec<(&String, &String)> = k.iter().collect();
        for t in turns.iter_mut().filter(|t| t.is_user()) {
            t.slot_spans = locate_slot_spans(&t.text, &pairs).spans;
        }
    }
    Ok(InsertionBlock { turns, recovery, meta })
}

/// Splices `block` between user turn `at` and its original assistant response.
pub fn apply_insertion(d: &Dialogue, at: usize, block: &InsertionBlock) -> Dialogue {
    let mut out = d.clone();
    out.splice(at + 1..at + 1, block.turns.clone());
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BargeInStats {
    pub sampled: usize,
    pub judged_invalid: usize,
    pub rejected: usize,
    pub applied: usize,
}

/// Samples, judges, generates and applies barge-ins in turn order.
pub fn augment_dialogue<R: Rng + ?Sized>(
    d: &Dialogue,
    cfg: &BargeInConfig,
    chat: &dyn ChatClient,
    rng: &mut R,
) -> crate::Result<(Dialogue, BargeInStats)> {
    cfg.validate()?;
    let candidates = sample_candidates(d, cfg, rng);
    let mut stats = BargeInStats {
        sampled: candidates.len(),
        ..Default::default()
    };
    let mut out = d.clone();
    let mut shift = 0;
    for c in candidates {
        let c = Candidate {
            turn_idx: c.turn_idx + shift,
            ..c
        };
        let attempt = judge_validity(&out, &c, chat, cfg).and_then(|ok| {
            if !ok {
                return Ok(None);
            }
            let state = current_state(&out, c.turn_idx);
            generate_insertion(&out, &c, &state, chat, cfg).map(Some)
        });
        match attempt {
            Ok(Some(block)) => {
                shift += block.turns.len();
                out = apply_insertion(&out, c.turn_idx, &block);
                stats.applied += 1;
            }
            Ok(None) => stats.judged_invalid += 1,
            Err(e) => {
                log::debug!("{}: barge-in at turn {} skipped: {e}", d.dialogue_id, c.turn_idx);
                stats.rejected += 1;
            }
        }
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::clients::stub::{JudgeMode, StubChat};
    use crate::corpus::{validate_dialogue, Goal, SubGoal};
    use crate::rng::seeded;

    fn goal() -> Goal {
        Goal {
            text: "Fly to Paris.".into(),
            sub_goals: vec![SubGoal {
                domain: "flight".into(),
                intent: "book".into(),
                constraints: [("destination".to_string(), "Paris".to_string())].into(),
                requests: Default::default(),
            }],
        }
    }

    fn six_turns() -> Dialogue {
        Dialogue::new(
            "d",
            "generic",
            goal(),
            vec![
                Turn::user("I want to book a flight to Paris.").with_span("destination", 27, 32),
                Turn::assistant("Sure, I can book a flight to Paris for you tomorrow morning."),
                Turn::user("Great, what time does it leave?"),
                Turn::assistant("It leaves at 9:40 from gate B7."),
                Turn::user("Please book it."),
                Turn::assistant("Your flight is booked, the reference number is XK42."),
            ],
        )
    }

    fn cand(turn_idx: usize, kind: BargeInType, style: BargeInStyle) -> Candidate {
        Candidate { turn_idx, kind, style }
    }

    #[test]
    fn sampling_boundaries() {
        let d = six_turns();
        let zero = BargeInConfig { sample_rate: 0.0, ..Default::default() };
        assert!(sample_candidates(&d, &zero, &mut seeded(1)).is_empty());
        let one = BargeInConfig { sample_rate: 1.0, ..Default::default() };
        let c = sample_candidates(&d, &one, &mut seeded(1));
        assert_eq!(c.iter().map(|c| c.turn_idx).collect::<Vec<_>>(), [0, 2, 4]);
    }

    #[test]
    fn judge_follows_stub_contract() {
        let d = six_turns();
        let cfg = BargeInConfig::default();
        let c = cand(4, BargeInType::Efficiency, BargeInStyle::Implicit);
        assert!(judge_validity(&d, &c, &StubChat::with_judge(JudgeMode::AlwaysYes), &cfg).unwrap());
        assert!(!judge_validity(&d, &c, &StubChat::with_judge(JudgeMode::AlwaysNo), &cfg).unwrap());
        // the response at turn 5 reads as a completed booking
        assert!(judge_validity(&d, &c, &StubChat::default(), &cfg).unwrap());
        let early = cand(0, BargeInType::Efficiency, BargeInStyle::Implicit);
        assert!(!judge_validity(&d, &early, &StubChat::default(), &cfg).unwrap());
    }

    #[test]
    fn unparseable_verdict_is_an_error() {
        let d = six_turns();
        let c = cand(0, BargeInType::Clarification, BargeInStyle::Raw);
        let r = judge_validity(&d, &c, &StubChat::scripted(["maybe"]), &BargeInConfig::default());
        assert!(matches!(r, Err(InsertionError::Client(ClientError::BadResponse(_)))));
    }

    #[test]
    fn error_recovery_raw_block() {
        let d = six_turns();
        let c = cand(0, BargeInType::ErrorRecovery, BargeInStyle::Raw);
        let state = current_state(&d, 0);
        let b = generate_insertion(&d, &c, &state, &StubChat::default(), &BargeInConfig::default()).unwrap();
        assert_eq!(b.turns.len(), 4);
        assert_eq!(b.turns[0].text, "Sure, I have the destination as Lon<bargein>");
        assert_eq!(b.turns[1].text, "No, that's wrong.");
        let meta = b.meta;
        assert_eq!(meta.erroneous_slots.unwrap()["destination"], "London");
        assert_eq!(meta.corrected_slots.unwrap()["destination"], "Paris");
        assert_eq!(b.turns[3].slot_values(), [("destination".to_string(), "Paris".to_string())]);
    }

    #[test]
    fn efficiency_implicit_is_a_backchannel() {
        let d = six_turns();
        let c = cand(4, BargeInType::Efficiency, BargeInStyle::Implicit);
        let b = generate_insertion(&d, &c, &BeliefState::new(), &StubChat::default(), &BargeInConfig::default()).unwrap();
        assert!(b.turns[0].text.ends_with(BARGEIN_TAG));
        assert_eq!(b.turns[1].text, "Uh-huh.");
        assert_eq!(b.recovery.role, Role::Assistant);
        assert!(b.meta.erroneous_slots.is_none());
    }

    #[test]
    fn clarification_interpreted_names_a_term() {
        let d = six_turns();
        let c = cand(2, BargeInType::Clarification, BargeInStyle::Interpreted);
        let b = generate_insertion(&d, &c, &BeliefState::new(), &StubChat::default(), &BargeInConfig::default()).unwrap();
        assert!(b.turns[1].text.starts_with("What do you mean by "));
    }

    #[test]
    fn block_format_is_enforced() {
        let d = six_turns();
        let cfg = BargeInConfig::default();
        let state = current_state(&d, 0);
        let er = cand(0, BargeInType::ErrorRecovery, BargeInStyle::Interpreted);
        let cases = [
            "[Assistant]: Sure, to London\n[User]: No, Paris.\n[Assistant]: Sorry.",
            "[Assistant]: to Lon<bargein>\n[User]: No, Paris.\n[Assistant]: Sorry.",
            "[Assistant]: to Lon<bargein>\n[User]: No, Paris.\n[Assistant]: Sorry.\nErroneous slots: {\"destination\": \"London\"}\nCorrected slots: {\"destination\": \"Rome\"}",
            "[Assistant]: to Lon<bargein>\n[User]: No.<bargein>\n[Assistant]: Sorry.",
            "[Assistant]: to Lon<bargein>\n[Assistant]: Sorry.",
        ];
        for reply in cases {
            let r = generate_insertion(&d, &er, &state, &StubChat::scripted([reply]), &cfg);
            assert!(matches!(r, Err(InsertionError::Format(_))), "{reply}: {r:?}");
        }
        let na = generate_insertion(&d, &er, &state, &StubChat::scripted(["NOT APPLICABLE"]), &cfg);
        assert_eq!(na.unwrap_err(), InsertionError::NotApplicable);
    }

    #[test]
    fn nested_slot_maps_are_flattened() {
        let mut d = six_turns();
        d.state_per_turn = Some([(0, [("flight.destination".to_string(), "Paris".to_string())].into())].into());
        let reply = "[Assistant]: Flying to Lon<bargein>\n[User]: No, Paris.\n[Assistant]: Paris it is.\n\
Erroneous slots: {\"flight\": {\"destination\": \"London\"}}\nCorrected slots: {\"flight\": {\"destination\": \"Paris\"}}";
        let c = cand(0, BargeInType::ErrorRecovery, BargeInStyle::Interpreted);
        let state = current_state(&d, 0);
        let b = generate_insertion(&d, &c, &state, &StubChat::scripted([reply]), &BargeInConfig::default()).unwrap();
        assert_eq!(b.meta.corrected_slots.unwrap()["flight.destination"], "Paris");
    }

    #[test]
    fn splice_keeps_originals_in_order() {
        let d = six_turns();
        let c = cand(0, BargeInType::ErrorRecovery, BargeInStyle::Interpreted);
        let state = current_state(&d, 0);
        let b = generate_insertion(&d, &c, &state, &StubChat::default(), &BargeInConfig::default()).unwrap();
        let out = apply_insertion(&d, 0, &b);
        assert_eq!(out.turns.len(), 8);
        let texts: Vec<&str> = out.turns.iter().map(|t| t.text.as_str()).collect();
        let mut it = texts.iter();
        for orig in &d.turns {
            assert!(it.any(|t| *t == orig.text));
        }
        assert_eq!(validate_dialogue(&out), vec![]);
    }

    #[test]
    fn two_insertions_in_one_dialogue() {
        let d = six_turns();
        let cfg = BargeInConfig { sample_rate: 1.0, ..Default::default() };
        let chat = StubChat::with_judge(JudgeMode::AlwaysYes);
        let (out, stats) = augment_dialogue(&d, &cfg, &chat, &mut seeded(3)).unwrap();
        assert!(stats.applied >= 2, "{stats:?}");
        assert_eq!(out.turns.iter().filter(|t| t.text.ends_with(BARGEIN_TAG)).count(), stats.applied);
        let originals: Vec<&str> = d.turns.iter().map(|t| t.text.as_str()).collect();
        let kept: Vec<&str> = out
            .turns
            .iter()
            .map(|t| t.text.as_str())
            .filter(|t| originals.contains(t))
            .collect();
        assert_eq!(kept, originals);
        assert_eq!(validate_dialogue(&out), vec![]);
    }

    #[test]
    fn trailing_user_turn_is_not_a_target() {
        let mut d = six_turns();
        d.turns.truncate(5);
        let c = cand(4, BargeInType::Efficiency, BargeInStyle::Raw);
        let r = judge_validity(&d, &c, &StubChat::with_judge(JudgeMode::AlwaysYes), &BargeInConfig::default());
        assert_eq!(r.unwrap_err(), InsertionError::NoResponse(4));
    }

    proptest! {
        #[test]
        fn augmented_dialogues_stay_valid(seed in any::<u64>()) {
            let d = six_turns();
            let cfg = BargeInConfig { sample_rate: 0.7, ..Default::default() };
            let chat = StubChat::with_judge(JudgeMode::AlwaysYes);
            let (out, _) = augment_dialogue(&d, &cfg, &chat, &mut seeded(seed)).unwrap();
            prop_assert!(validate_dialogue(&out).is_empty());
            for t in &out.turns {
                let tagged = t.text.contains(BARGEIN_TAG);
                prop_assert_eq!(tagged, t.role == Role::Assistant && t.bargein.is_some());
                if let Some(k) = t.bargein.as_ref().and_then(|m| m.corrected_slots.as_ref()) {
                    let state = current_state(&d, 0);
                    for (slot, v) in k {
                        prop_assert_eq!(state.get(slot), Some(v));
                    }
                }
            }
        }
    }
}
