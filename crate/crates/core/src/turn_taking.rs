//! Streaming three-class turn-taking decisions over per-frame probabilities.
//!
//! Each assistant turn is one stream. A strategy looks at the last `W`
//! frames (fewer at the start of a stream), fires at most once, and the fire
//! is scored against the trigger window formed by the final `W` frames.
//! Frame indices are zero-based throughout.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Frames labeled with the terminal class at the end of a turn.
pub const TRIGGER_FRAMES: usize = 6;

const DEFAULTS_TOML: &str = include_str!("../config/turn_taking.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameLabel {
    Listen,
    Turnend,
    Bargein,
}

/// The class a turn ends with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnType {
    Turnend,
    Bargein,
}

impl TurnType {
    pub const ALL: [TurnType; 2] = [TurnType::Turnend, TurnType::Bargein];

    pub fn label(self) -> FrameLabel {
        match self {
            TurnType::Turnend => FrameLabel::Turnend,
            TurnType::Bargein => FrameLabel::Bargein,
        }
    }

    /// Single-letter row label used in reports.
    pub fn short(self) -> &'static str {
        match self {
            TurnType::Turnend => "T",
            TurnType::Bargein => "B",
        }
    }
}

/// `n - min(n, 6)` listen frames followed by the terminal label.
pub fn label_frames(n_tokens: usize, turn_type: TurnType) -> Result<Vec<FrameLabel>> {
    if n_tokens == 0 {
        return Err(Error::contract("a stream needs at least one frame"));
    }
    let tail = n_tokens.min(TRIGGER_FRAMES);
    let mut v = vec![FrameLabel::Listen; n_tokens - tail];
    v.extend(std::iter::repeat_n(turn_type.label(), tail));
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbFrame {
    pub p_listen: f64,
    pub p_turnend: f64,
    pub p_bargein: f64,
}

impl ProbFrame {
    pub fn new(p_listen: f64, p_turnend: f64, p_bargein: f64) -> Result<Self> {
        let f = ProbFrame {
            p_listen,
            p_turnend,
            p_bargein,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let ps = [self.p_listen, self.p_turnend, self.p_bargein];
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::contract(format!("probability out of [0, 1]: {ps:?}")));
        }
        if (ps.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return Err(Error::contract(format!("probabilities do not sum to 1: {ps:?}")));
        }
        Ok(())
    }

    pub fn p(&self, c: TurnType) -> f64 {
        match c {
            TurnType::Turnend => self.p_turnend,
            TurnType::Bargein => self.p_bargein,
        }
    }

    /// Most probable class; ties favor listen, then turn-end.
    pub fn argmax(&self) -> FrameLabel {
        if self.p_listen >= self.p_turnend && self.p_listen >= self.p_bargein {
            FrameLabel::Listen
        } else if self.p_turnend >= self.p_bargein {
            FrameLabel::Turnend
        } else {
            FrameLabel::Bargein
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Argmax,
    ProbThreshold,
    TailThreshold,
    ListenRelative,
    LinearWeighted,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Argmax,
        Strategy::ProbThreshold,
        Strategy::TailThreshold,
        Strategy::ListenRelative,
        Strategy::LinearWeighted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Argmax => "argmax",
            Strategy::ProbThreshold => "prob_threshold",
            Strategy::TailThreshold => "tail_threshold",
            Strategy::ListenRelative => "listen_relative",
            Strategy::LinearWeighted => "linear_weighted",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s.replace('-', "_"))
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub turnend: f64,
    pub bargein: f64,
}

impl Thresholds {
    pub fn get(&self, c: TurnType) -> f64 {
        match c {
            TurnType::Turnend => self.turnend,
            TurnType::Bargein => self.bargein,
        }
    }
}

/// Shipped defaults: the window size and per-strategy thresholds.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TurnTakingDefaults {
    pub window: usize,
    #[serde(flatten)]
    pub thresholds: BTreeMap<Strategy, Thresholds>,
}

static DEFAULTS: LazyLock<TurnTakingDefaults> =
    LazyLock::new(|| TurnTakingDefaults::from_toml(DEFAULTS_TOML).expect("bundled turn-taking defaults"));

impl TurnTakingDefaults {
    pub fn bundled() -> &'static TurnTakingDefaults {
        &DEFAULTS
    }

    pub fn bundled_source() -> &'static str {
        DEFAULTS_TOML
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(format!("turn-taking defaults: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub strategy: Strategy,
    pub window: usize,
    /// Absent for argmax.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
}

impl StrategyConfig {
    pub fn defaults(strategy: Strategy) -> Self {
        let d = TurnTakingDefaults::bundled();
        StrategyConfig {
            strategy,
            window: d.window,
            thresholds: d.thresholds.get(&strategy).copied(),
        }
    }

    pub fn with_thresholds(mut self, turnend: f64, bargein: f64) -> Self {
        self.thresholds = Some(Thresholds { turnend, bargein });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        match (self.strategy, self.thresholds) {
            (Strategy::Argmax, _) => Ok(()),
            (s, None) => Err(Error::Config(format!("{s} needs thresholds"))),
            (_, Some(t)) if !(t.turnend > 0.0 && t.bargein > 0.0) => {
                Err(Error::Config("thresholds must be positive".into()))
            }
            (_, Some(t)) if t.bargein >= t.turnend => Err(Error::Config(
                "the barge-in threshold must be lower than the turn-end threshold".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Score of class `c` over a window of frames, oldest first.
///
/// Argmax scores 1 when the newest frame's argmax is `c` and 0 otherwise.
pub fn window_score(strategy: Strategy, window: &[ProbFrame], c: TurnType) -> f64 {
    match strategy {
        Strategy::Argmax => match window.last() {
            Some(f) if f.argmax() == c.label() => 1.0,
            _ => 0.0,
        },
        Strategy::ProbThreshold => window.iter().map(|f| f.p(c)).sum(),
        Strategy::ListenRelative => window.iter().map(|f| (f.p(c) - f.p_listen).max(0.0)).sum(),
        Strategy::LinearWeighted => {
            let n = window.len();
            let norm = (n * (n + 1) / 2) as f64;
            window
                .iter()
                .enumerate()
                .map(|(k, f)| (k + 1) as f64 / norm * f.p(c))
                .sum()
        }
        Strategy::TailThreshold => {
            // Longest run of frames whose argmax is `c`; equal-length runs
            // keep the larger sum.
            let (mut best_len, mut best_sum) = (0usize, 0.0f64);
            let (mut len, mut sum) = (0usize, 0.0f64);
            for f in window {
                if f.argmax() == c.label() {
                    len += 1;
                    sum += f.p(c);
                    if len > best_len || (len == best_len && sum > best_sum) {
                        best_len = len;
                        best_sum = sum;
                    }
                } else {
                    len = 0;
                    sum = 0.0;
                }
            }
            best_sum
        }
    }
}

fn fires(cfg: &StrategyConfig, window: &[ProbFrame]) -> Option<TurnType> {
    // Turn-end is checked first so it wins ties.
    TurnType::ALL.into_iter().find(|&c| {
        let s = window_score(cfg.strategy, window, c);
        match cfg.thresholds {
            _ if cfg.strategy == Strategy::Argmax => s > 0.0,
            Some(t) => s > t.get(c),
            None => false,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum FireDecision {
    Listen,
    Fire { class: TurnType, frame: usize },
}

/// Per-stream streaming state.
#[derive(Debug, Clone)]
pub struct StrategyState {
    cfg: StrategyConfig,
    window: VecDeque<ProbFrame>,
    frame: usize,
    fired: bool,
}

impl StrategyState {
    pub fn new(cfg: StrategyConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(StrategyState {
            cfg,
            window: VecDeque::with_capacity(cfg.window),
            frame: 0,
            fired: false,
        })
    }

    pub fn has_fired(&self) -> bool {
        self.fired
    }

    /// Consumes one frame. Stepping a stream that already fired is an error.
    pub fn step(&mut self, frame: ProbFrame) -> Result<FireDecision> {
        if self.fired {
            return Err(Error::contract("stream already fired"));
        }
        if self.window.len() == self.cfg.window {
            self.window.pop_front();
        }
        self.window.push_back(frame);
        let idx = self.frame;
        self.frame += 1;
        let decision = match fires(&self.cfg, self.window.make_contiguous()) {
            Some(class) => {
                self.fired = true;
                FireDecision::Fire { class, frame: idx }
            }
            None => FireDecision::Listen,
        };
        Ok(decision)
    }
}

/// Runs a whole stream and returns its single decision.
pub fn run_stream(cfg: &StrategyConfig, frames: &[ProbFrame]) -> Result<FireDecision> {
    let mut st = StrategyState::new(*cfg)?;
    for f in frames {
        let d = st.step(*f)?;
        if d != FireDecision::Listen {
            return Ok(d);
        }
    }
    Ok(FireDecision::Listen)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeClass {
    Correct,
    Early,
    Confused,
    Missed,
}

impl OutcomeClass {
    pub const ALL: [OutcomeClass; 4] = [
        OutcomeClass::Correct,
        OutcomeClass::Early,
        OutcomeClass::Confused,
        OutcomeClass::Missed,
    ];
}

/// Trigger window `[t_s, t_e]` of an `n`-frame stream.
pub fn trigger_window(n: usize) -> (usize, usize) {
    (n.saturating_sub(TRIGGER_FRAMES), n.saturating_sub(1))
}

pub fn classify_outcome(fire: FireDecision, truth: TurnType, trigger: (usize, usize)) -> OutcomeClass {
    match fire {
        FireDecision::Listen => OutcomeClass::Missed,
        FireDecision::Fire { frame, .. } if frame < trigger.0 => OutcomeClass::Early,
        FireDecision::Fire { class, .. } if class == truth => OutcomeClass::Correct,
        FireDecision::Fire { .. } => OutcomeClass::Confused,
    }
}

/// One assistant turn's probabilities with its ground-truth ending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledStream {
    pub id: String,
    pub truth: TurnType,
    pub frames: Vec<ProbFrame>,
}

/// Outcome percentages for one truth class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OutcomeRates {
    pub correct: f64,
    pub early: f64,
    pub confused: f64,
    pub missed: f64,
}

impl OutcomeRates {
    pub fn new(correct: f64, early: f64, confused: f64, missed: f64) -> Self {
        OutcomeRates {
            correct,
            early,
            confused,
            missed,
        }
    }

    /// Correct and confused collapsed into a single "speak" outcome.
    pub fn binary_accuracy(&self) -> f64 {
        self.correct + self.confused
    }

    pub fn total(&self) -> f64 {
        self.correct + self.early + self.confused + self.missed
    }

    pub fn get(&self, o: OutcomeClass) -> f64 {
        match o {
            OutcomeClass::Correct => self.correct,
            OutcomeClass::Early => self.early,
            OutcomeClass::Confused => self.confused,
            OutcomeClass::Missed => self.missed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub label: String,
    pub n: usize,
    #[serde(flatten)]
    pub rates: OutcomeRates,
    pub binary_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub method: Strategy,
    pub config: StrategyConfig,
    pub rows: Vec<OutcomeRow>,
}

impl OutcomeReport {
    pub fn row(&self, truth: TurnType) -> Option<&OutcomeRow> {
        self.rows.iter().find(|r| r.label == truth.short())
    }
}

/// Percent of each outcome per truth class. Classes with no streams are omitted.
pub fn evaluate_set(streams: &[LabeledStream], cfg: &StrategyConfig) -> Result<OutcomeReport> {
    cfg.validate()?;
    let mut counts: BTreeMap<TurnType, BTreeMap<OutcomeClass, usize>> = BTreeMap::new();
    for s in streams {
        let fire = run_stream(cfg, &s.frames)?;
        let o = classify_outcome(fire, s.truth, trigger_window(s.frames.len()));
        *counts.entry(s.truth).or_default().entry(o).or_default() += 1;
    }
    let rows = TurnType::ALL
        .into_iter()
        .filter_map(|t| {
            let c = counts.get(&t)?;
            let n: usize = c.values().sum();
            let pct = |o| 100.0 * *c.get(&o).unwrap_or(&0) as f64 / n as f64;
            let rates = OutcomeRates::new(
                pct(OutcomeClass::Correct),
                pct(OutcomeClass::Early),
                pct(OutcomeClass::Confused),
                pct(OutcomeClass::Missed),
            );
            Some(OutcomeRow {
                label: t.short().into(),
                n,
                rates,
                binary_accuracy: rates.binary_accuracy(),
            })
        })
        .collect();
    Ok(OutcomeReport {
        method: cfg.strategy,
        config: *cfg,
        rows,
    })
}

/// Evaluates every `(turnend, bargein)` pair with `bargein < turnend`.
pub fn sweep(
    streams: &[LabeledStream],
    base: &StrategyConfig,
    turnend: &[f64],
    bargein: &[f64],
) -> Result<Vec<OutcomeReport>> {
    let mut out = Vec::new();
    for &t in turnend {
        for &b in bargein.iter().filter(|b| **b < t) {
            out.push(evaluate_set(streams, &base.with_thresholds(t, b))?);
        }
    }
    Ok(out)
}

fn bad_record(reason: String) -> Error {
    Error::InvalidRecord {
        source_name: "frames".into(),
        reason,
    }
}

#[derive(Debug, Deserialize)]
struct FrameRecord {
    stream: String,
    #[serde(default)]
    truth: Option<TurnType>,
    t: usize,
    p_listen: f64,
    p_turnend: f64,
    p_bargein: f64,
}

/// Reads newline-delimited frame records
/// `{stream, truth, t, p_listen, p_turnend, p_bargein}` into streams ordered
/// by first appearance, frames ordered by `t`.
pub fn read_streams(r: impl BufRead) -> Result<Vec<LabeledStream>> {
    let mut order: Vec<String> = Vec::new();
    type Partial = (Option<TurnType>, Vec<(usize, ProbFrame)>);
    let mut by_id: BTreeMap<String, Partial> = BTreeMap::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<frames>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FrameRecord = serde_json::from_str(&line)
            .map_err(|e| bad_record(format!("frame record on line {}: {e}", n + 1)))?;
        let f = ProbFrame::new(rec.p_listen, rec.p_turnend, rec.p_bargein)
            .map_err(|e| bad_record(format!("line {}: {e}", n + 1)))?;
        let entry = by_id.entry(rec.stream.clone()).or_insert_with(|| {
            order.push(rec.stream.clone());
            (None, Vec::new())
        });
        match (entry.0, rec.truth) {
            (Some(a), Some(b)) if a != b => {
                return Err(bad_record(format!("stream {} has two truth labels", rec.stream)))
            }
            (None, t) => entry.0 = t,
            _ => {}
        }
        entry.1.push((rec.t, f));
    }
    order
        .into_iter()
        .map(|id| {
            let (truth, mut frames) = by_id.remove(&id).expect("seen");
            frames.sort_by_key(|(t, _)| *t);
            let truth = truth.ok_or_else(|| bad_record(format!("stream {id} has no truth label")))?;
            Ok(LabeledStream {
                id,
                truth,
                frames: frames.into_iter().map(|(_, f)| f).collect(),
            })
        })
        .collect()
}

pub fn write_streams(w: &mut impl Write, streams: &[LabeledStream]) -> Result<()> {
    for s in streams {
        for (t, f) in s.frames.iter().enumerate() {
            let rec = serde_json::json!({
                "stream": s.id,
                "truth": s.truth,
                "t": t,
                "p_listen": f.p_listen,
                "p_turnend": f.p_turnend,
                "p_bargein": f.p_bargein,
            });
            writeln!(w, "{rec}").map_err(|e| Error::io("<frames>", e))?;
        }
    }
    Ok(())
}
