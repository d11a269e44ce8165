//! Goal coverage: goal alignment, slot match rate and disclosure timing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::clients::{prompts, ChatClient, ChatRequest, PromptKind};
use crate::corpus::{Dialogue, Goal, Role};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GoalItem {
    Constraint { domain: String, slot: String, value: String },
    Request { domain: String, slot: String },
}

impl GoalItem {
    pub fn is_request(&self) -> bool {
        matches!(self, GoalItem::Request { .. })
    }
}

impl fmt::Display for GoalItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoalItem::Constraint { domain, slot, value } => write!(f, "{domain}-{slot} = {value}"),
            GoalItem::Request { domain, slot } => write!(f, "{domain}-{slot} (request)"),
        }
    }
}

/// Constraints then requests, sub-goal by sub-goal.
pub fn goal_items(goal: &Goal) -> Vec<GoalItem> {
    let mut out = Vec::new();
    for sg in &goal.sub_goals {
        for (slot, value) in &sg.constraints {
            out.push(GoalItem::Constraint {
                domain: sg.domain.clone(),
                slot: slot.clone(),
                value: value.clone(),
            });
        }
        for slot in &sg.requests {
            out.push(GoalItem::Request {
                domain: sg.domain.clone(),
                slot: slot.clone(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Covered {
    /// Dialogue turn index of the covering utterance.
    pub turn_index: usize,
    /// One-based count of user turns up to and including that utterance.
    pub user_turn: usize,
    pub item: GoalItem,
}

/// Items not yet mentioned by the user, and those already mentioned in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalCoverageState {
    pub items: Vec<GoalItem>,
    pub remaining: BTreeSet<usize>,
    pub covered: Vec<Covered>,
    pub user_turns: usize,
}

impl GoalCoverageState {
    pub fn new(items: Vec<GoalItem>) -> Self {
        GoalCoverageState {
            remaining: (0..items.len()).collect(),
            items,
            covered: Vec::new(),
            user_turns: 0,
        }
    }

    pub fn for_goal(goal: &Goal) -> Self {
        GoalCoverageState::new(goal_items(goal))
    }

    /// Moves the listed zero-based items to covered. Already-covered and
    /// unknown indices are ignored.
    pub fn cover(&mut self, turn_index: usize, user_turn: usize, selection: &[usize]) {
        for &i in selection {
            if self.remaining.remove(&i) {
                self.covered.push(Covered {
                    turn_index,
                    user_turn,
                    item: self.items[i].clone(),
                });
            }
        }
    }

    pub fn is_complete(&self) -> bool {
        self.remaining.is_empty()
    }

    /// Numbered list shown to the judge.
    pub fn numbered_items(&self) -> String {
        self.items
            .iter()
            .enumerate()
            .map(|(i, it)| format!("{}. {it}", i + 1))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

static BRACKETED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[\s*(\d+(?:\s*,\s*\d+)*)?\s*,?\s*\]").unwrap());

/// Parses `[1, 3]` into zero-based indices.
pub fn parse_selection(reply: &str) -> Option<Vec<usize>> {
    let c = BRACKETED.captures(reply)?;
    Some(match c.get(1) {
        None => Vec::new(),
        Some(m) => m
            .as_str()
            .split(',')
            .filter_map(|n| n.trim().parse::<usize>().ok())
            .filter(|n| *n >= 1)
            .map(|n| n - 1)
            .collect(),
    })
}

fn history(d: &Dialogue, upto: usize) -> String {
    d.turns[..upto]
        .iter()
        .map(|t| match t.role {
            Role::User => format!("User: {}", t.text),
            Role::Assistant => format!("Assistant: {}", t.text),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Asks the judge which goal items user turn `turn_idx` mentions.
pub fn judge_turn_coverage(
    state: &GoalCoverageState,
    d: &Dialogue,
    turn_idx: usize,
    judge: &dyn ChatClient,
) -> Result<GoalCoverageState> {
    let mut next = state.clone();
    next.user_turns += 1;
    let vars = BTreeMap::from([
        ("goal_items".to_string(), state.numbered_items()),
        ("dial_hist".to_string(), history(d, turn_idx)),
        ("user_utterance".to_string(), d.turns[turn_idx].text.clone()),
    ]);
    let req = ChatRequest::from_template(PromptKind::GoalAlignment, prompts::GOAL_ALIGNMENT, vars).with_temperature(0.0);
    for attempt in 0..2 {
        let reply = judge.chat(&req)?;
        if let Some(sel) = parse_selection(&reply) {
            next.cover(turn_idx, next.user_turns, &sel);
            return Ok(next);
        }
        log::warn!(
            "{}: goal-alignment answer `{}` for turn {turn_idx} unusable (attempt {})",
            d.dialogue_id,
            reply.trim(),
            attempt + 1
        );
    }
    Ok(next)
}

/// Runs the judge over every user turn of a dialogue.
pub fn evaluate_dialogue(d: &Dialogue, judge: &dyn ChatClient) -> Result<GoalCoverageState> {
    let mut st = GoalCoverageState::for_goal(&d.goal);
    for (i, t) in d.turns.iter().enumerate() {
        if t.is_user() {
            st = judge_turn_coverage(&st, d, i, judge)?;
        }
    }
    Ok(st)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaSmr {
    pub dialogues: usize,
    pub ga: f64,
    pub smr: f64,
    pub smr_constraints: f64,
    pub smr_requests: f64,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

/// Goal alignment (share of fully covered dialogues) and micro-averaged slot
/// match rate. Items of each kind are also reported separately.
pub fn ga_smr(states: &[GoalCoverageState]) -> GaSmr {
    if states.is_empty() {
        return GaSmr {
            dialogues: 0,
            ga: 0.0,
            smr: 0.0,
            smr_constraints: 0.0,
            smr_requests: 0.0,
        };
    }
    let complete = states.iter().filter(|s| s.is_complete()).count();
    let (mut cov, mut tot) = ([0usize; 2], [0usize; 2]);
    for s in states {
        for it in &s.items {
            tot[usize::from(it.is_request())] += 1;
        }
        for c in &s.covered {
            cov[usize::from(c.item.is_request())] += 1;
        }
    }
    GaSmr {
        dialogues: states.len(),
        ga: complete as f64 / states.len() as f64,
        smr: ratio(cov[0] + cov[1], tot[0] + tot[1]),
        smr_constraints: ratio(cov[0], tot[0]),
        smr_requests: ratio(cov[1], tot[1]),
    }
}

/// Coverage after each user turn for one dialogue, one entry per user turn.
pub fn dialogue_curve(s: &GoalCoverageState, len: usize) -> Vec<f64> {
    (1..=len)
        .map(|k| ratio(s.covered.iter().filter(|c| c.user_turn <= k).count(), s.items.len()))
        .collect()
}

/// Mean cumulative coverage after user turn 1, 2, ... up to the longest
/// dialogue. Shorter dialogues hold their final value.
pub fn disclosure_curve(states: &[GoalCoverageState]) -> Vec<f64> {
    let len = states.iter().map(|s| s.user_turns).max().unwrap_or(0);
    let mut sum = vec![0.0; len];
    for s in states {
        for (acc, v) in sum.iter_mut().zip(dialogue_curve(s, len)) {
            *acc += v;
        }
    }
    sum.into_iter().map(|v| v / states.len() as f64).collect()
}

/// `turn,coverage` CSV, one-based turns.
pub fn curve_csv(curve: &[f64]) -> String {
    let mut out = String::from("turn,coverage\n");
    for (i, v) in curve.iter().enumerate() {
        out.push_str(&format!("{},{v}\n", i + 1));
    }
    out
}
