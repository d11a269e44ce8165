//! Length-conditioned disfluency sampling and slot-local injection.
//!
//! A user turn of `L` words becomes disfluent with probability `1 - b^L`; one
//! of six types is then drawn uniformly and placed near a slot value or
//! anywhere in the turn. Filled pauses, discourse markers, edit terms and
//! repetitions are inserted by rule and are exactly invertible; corrections
//! and restarts are written by the generator client and checked before use.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clients::{prompts, ChatClient, ChatRequest, ClientError, PromptKind};
use crate::corpus::{fluent_projection, strip_markers, Dialogue, DisfluencyMeta, DisfluencyType, SlotSpan, Turn};
use crate::ingest::locate_slot_spans;
use crate::text::{byte_offset, char_len, char_offset, char_slice, is_punct, split_trailing_punct, words, Word};

pub const FP_FILLERS: &[&str] = &["uh,", "um,"];
pub const DM_FILLERS: &[&str] = &["well,", "you know,", "I mean,"];
pub const EDIT_FILLERS: &[&str] = &["I mean,", "sorry,", "rather,"];

/// Longest abandoned fragment accepted for a restart.
pub const MAX_RESTART_FRAGMENT: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisfluencyConfig {
    /// Word-level fluency rate.
    pub b: f64,
    pub slot_window_words: usize,
    pub p_slot_local: f64,
}

impl Default for DisfluencyConfig {
    fn default() -> Self {
        DisfluencyConfig {
            b: 0.9453,
            slot_window_words: 2,
            p_slot_local: 0.5,
        }
    }
}

impl DisfluencyConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.b > 0.0 && self.b < 1.0) {
            return Err(crate::Error::Config(format!("disfluency b must be in (0, 1), got {}", self.b)));
        }
        if !(0.0..=1.0).contains(&self.p_slot_local) {
            return Err(crate::Error::Config(format!(
                "p_slot_local must be in [0, 1], got {}",
                self.p_slot_local
            )));
        }
        Ok(())
    }
}

pub fn disfluency_probability(len_words: usize, b: f64) -> f64 {
    1.0 - b.powf(len_words as f64)
}

/// Draws whether the turn is disfluent and, if so, which type.
pub fn sample_and_type<R: Rng + ?Sized>(t: &Turn, cfg: &DisfluencyConfig, rng: &mut R) -> Option<DisfluencyType> {
    let p = disfluency_probability(words(&t.text).len(), cfg.b);
    rng.random_bool(p)
        .then(|| DisfluencyType::ALL[rng.random_range(0..DisfluencyType::ALL.len())])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub kind: DisfluencyType,
    /// Target word index in the fluent text.
    pub position: usize,
    /// Targeted slot span, for corrections.
    pub span: Option<usize>,
}

fn overlaps(w: &Word<'_>, s: &SlotSpan) -> bool {
    w.start < s.end && s.start < w.end
}

/// Picks the target word. Corrections always target a slot value; a
/// correction drawn for a slotless turn is redrawn among the other types.
pub fn choose_position<R: Rng + ?Sized>(
    t: &Turn,
    kind: DisfluencyType,
    cfg: &DisfluencyConfig,
    rng: &mut R,
) -> Option<Placement> {
    let ws = words(&t.text);
    if ws.is_empty() {
        return None;
    }
    let mut kind = kind;
    if kind == DisfluencyType::COR {
        if !t.slot_spans.is_empty() {
            let k = rng.random_range(0..t.slot_spans.len());
            let position = ws.iter().position(|w| overlaps(w, &t.slot_spans[k]))?;
            return Some(Placement {
                kind,
                position,
                span: Some(k),
            });
        }
        let others: Vec<DisfluencyType> = DisfluencyType::ALL
            .into_iter()
            .filter(|k| *k != DisfluencyType::COR)
            .collect();
        kind = *others.choose(rng).expect("five types");
        log::debug!("correction on slotless turn redrawn as {kind:?}");
    }

    let slot_words: Vec<usize> = (0..ws.len())
        .filter(|&i| t.slot_spans.iter().any(|s| overlaps(&ws[i], s)))
        .collect();
    let position = if !slot_words.is_empty() && rng.random_bool(cfg.p_slot_local) {
        let near: Vec<usize> = (0..ws.len())
            .filter(|&i| slot_words.iter().any(|&j| i.abs_diff(j) <= cfg.slot_window_words))
            .collect();
        *near.choose(rng).expect("slot words are near themselves")
    } else {
        rng.random_range(0..ws.len())
    };
    Some(Placement {
        kind,
        position,
        span: None,
    })
}

#[derive(Debug, Error, PartialEq)]
pub enum InjectError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("injection rejected: {0}")]
    Rejected(String),
}

fn reject<T>(msg: impl Into<String>) -> Result<T, InjectError> {
    Err(InjectError::Rejected(msg.into()))
}

fn fillers(kind: DisfluencyType) -> &'static [&'static str] {
    match kind {
        DisfluencyType::FP => FP_FILLERS,
        DisfluencyType::DM => DM_FILLERS,
        _ => EDIT_FILLERS,
    }
}

fn check_fluent(t: &Turn) -> Result<(), InjectError> {
    if !t.disfluency.is_empty() || t.tagged.as_ref().is_some_and(|g| *g != t.text) {
        return reject("turn already carries a disfluency");
    }
    if strip_markers(&t.text) != t.text {
        return reject("text contains marker tokens");
    }
    Ok(())
}

fn shift_spans(spans: &mut [SlotSpan], at: usize, by: usize) {
    for s in spans.iter_mut().filter(|s| s.start >= at) {
        s.start += by;
        s.end += by;
    }
}

fn meta(kind: DisfluencyType, position: usize, inserted_span: &str) -> DisfluencyMeta {
    DisfluencyMeta {
        kind,
        position,
        inserted_span: inserted_span.to_string(),
        original_value: None,
        wrong_value: None,
    }
}

/// Inserts `marker filler` before word `position` (FP, DM, EDIT).
///
/// A target inside a multi-word slot value moves to the start of that value.
pub fn insert_filler(t: &Turn, kind: DisfluencyType, position: usize, filler: &str) -> Result<Turn, InjectError> {
    check_fluent(t)?;
    let ws = words(&t.text);
    let Some(w) = ws.get(position) else {
        return reject(format!("position {position} beyond {} words", ws.len()));
    };
    let mut at = w.start;
    if let Some(s) = t.slot_spans.iter().find(|s| s.start < at && at < s.end) {
        at = s.start;
    }
    let b = byte_offset(&t.text, at).expect("word offset");
    let tagged = format!("{}{} {filler} {}", &t.text[..b], kind.marker(), &t.text[b..]);
    let mut out = t.clone();
    out.text = strip_markers(&tagged);
    out.tagged = Some(tagged);
    shift_spans(&mut out.slot_spans, at, char_len(filler) + 1);
    out.disfluency.push(meta(kind, position, filler));
    Ok(out)
}

/// Repeats the span of up to two words ending at `position`, right after it.
pub fn insert_repetition(t: &Turn, position: usize) -> Result<Turn, InjectError> {
    check_fluent(t)?;
    let ws = words(&t.text);
    let mut p = position;
    let mut tries = 0;
    let (start, end) = loop {
        let Some(w) = ws.get(p) else {
            return reject(format!("position {p} beyond {} words", ws.len()));
        };
        let core = split_trailing_punct(w.text).0;
        if core.is_empty() {
            return reject("target word is punctuation");
        }
        let end = w.start + char_len(core);
        let Some(s) = t.slot_spans.iter().find(|s| s.start < end && end < s.end) else {
            let prev_joins = p > 0 && {
                let (c, punct) = split_trailing_punct(ws[p - 1].text);
                !c.is_empty() && punct.is_empty()
            };
            let start = if prev_joins { ws[p - 1].start } else { w.start };
            break (start, end);
        };
        // repetition inside a slot value: repeat up to the end of the value
        let last = ws.iter().rposition(|w| w.start < s.end).expect("span has words");
        tries += 1;
        if last == p || tries > 1 {
            return reject("repetition would split a slot value");
        }
        p = last;
    };
    let unit = char_slice(&t.text, start, end).expect("word range").to_string();
    let b = byte_offset(&t.text, end).expect("word offset");
    let tagged = format!("{} {} {unit}{}", &t.text[..b], DisfluencyType::REP.marker(), &t.text[b..]);
    let mut out = t.clone();
    out.text = strip_markers(&tagged);
    out.tagged = Some(tagged);
    shift_spans(&mut out.slot_spans, end, char_len(&unit) + 1);
    out.disfluency.push(meta(DisfluencyType::REP, p, &unit));
    Ok(out)
}

const PAUSES: &[&str] = &["—", "–", "...", "…", "-"];

/// First pause at or after byte `from`: `(start, end)` in bytes. A bare
/// hyphen counts only when followed by whitespace or the end of the text.
fn find_pause(s: &str, from: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for p in PAUSES {
        let mut search = from;
        while let Some(i) = s[search..].find(p).map(|i| i + search) {
            let end = i + p.len();
            let ok = *p != "-" || s[end..].chars().next().is_none_or(char::is_whitespace);
            if ok {
                if best.is_none_or(|(b, _)| i < b) {
                    best = Some((i, end));
                }
                break;
            }
            search = end;
        }
    }
    best
}

/// Common prefix (capped so it does not overlap the common suffix) and
/// suffix lengths, in characters.
fn diff(orig: &str, out: &str) -> (usize, usize) {
    let o: Vec<char> = orig.chars().collect();
    let m: Vec<char> = out.chars().collect();
    let suffix = o.iter().rev().zip(m.iter().rev()).take_while(|(a, b)| a == b).count();
    let cap = o.len().min(m.len()) - suffix;
    let prefix = o.iter().zip(m.iter()).take(cap).take_while(|(a, b)| a == b).count();
    (prefix, suffix)
}

fn clean_reply(reply: &str) -> String {
    let line = reply.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let line = line.strip_prefix("Output:").map(str::trim).unwrap_or(line);
    let quoted = [('"', '"'), ('“', '”')]
        .into_iter()
        .find_map(|(a, b)| line.strip_prefix(a).and_then(|l| l.strip_suffix(b)));
    quoted.unwrap_or(line).trim().to_string()
}

/// Puts `marker` after the pause ending at byte `at`, adding a space to the
/// surface text if the generator wrote none.
fn mark_after_pause(m: &str, at: usize, marker: &str) -> (String, String) {
    let rest = &m[at..];
    let text = if rest.starts_with(char::is_whitespace) || rest.is_empty() {
        m.to_string()
    } else {
        format!("{} {rest}", &m[..at])
    };
    let tagged = format!("{} {marker}{}", &text[..at], &text[at..]);
    (text, tagged)
}

/// Moves spans of `orig` into `text`, where `inserted` characters were added at char `at`.
fn carry_spans(t: &Turn, text: &str, at: usize, inserted: usize) -> Result<Vec<SlotSpan>, InjectError> {
    let mut spans = t.slot_spans.clone();
    for s in spans.iter_mut() {
        if s.start >= at {
            s.start += inserted;
            s.end += inserted;
        } else if s.end > at {
            return reject(format!("edit falls inside slot `{}`", s.slot));
        }
    }
    for (old, new) in t.slot_spans.iter().zip(&spans) {
        if t.span_text(old) != char_slice(text, new.start, new.end) {
            return reject(format!("slot `{}` moved", old.slot));
        }
    }
    Ok(spans)
}

fn finish(mut out: Turn, text: String, tagged: String, spans: Vec<SlotSpan>, m: DisfluencyMeta) -> Result<Turn, InjectError> {
    out.text = text;
    out.tagged = Some(tagged);
    out.slot_spans = spans;
    out.disfluency.push(m);
    match fluent_projection(&out) {
        Ok(_) => Ok(out),
        Err(e) => reject(format!("result does not project: {e}")),
    }
}

/// Self-correction of slot span `span_idx`: wrong value, pause, cue, gold value.
pub fn insert_correction(t: &Turn, position: usize, span_idx: usize, gen: &dyn ChatClient) -> Result<Turn, InjectError> {
    check_fluent(t)?;
    let Some(span) = t.slot_spans.get(span_idx) else {
        return reject("no such slot span");
    };
    let gold = t.span_text(span).unwrap_or_default().to_string();
    if gold.is_empty() {
        return reject("empty slot value");
    }
    let vars = BTreeMap::from([
        ("utterance".to_string(), t.text.clone()),
        ("slot_name".to_string(), span.slot.clone()),
        ("slot_value".to_string(), gold.clone()),
        ("slot_offset".to_string(), span.start.to_string()),
    ]);
    let reply = gen.chat(&ChatRequest::from_template(PromptKind::SelfCorrection, prompts::SELF_CORRECTION, vars))?;
    let mut m = clean_reply(&reply);

    for _ in 0..2 {
        if !m.contains(&gold) {
            return reject("correction lost the slot value");
        }
        let (prefix, suffix) = diff(&t.text, &m);
        if prefix + suffix != char_len(&t.text) {
            return reject("generator rewrote text outside the slot");
        }
        let mid_end = char_len(&m) - suffix;
        let (pb, me) = (byte_offset(&m, prefix).expect("prefix"), byte_offset(&m, mid_end).expect("mid"));
        let Some((ps, pe)) = find_pause(&m, pb).filter(|(s, _)| *s < me) else {
            return reject("no pause between wrong and correct value");
        };
        if !m[pe..].starts_with(char::is_whitespace) && pe < m.len() {
            m = format!("{} {}", &m[..pe], &m[pe..]);
            continue;
        }
        let wrong = m[pb..ps].trim().trim_end_matches(is_punct).trim();
        if wrong.is_empty() || wrong.eq_ignore_ascii_case(&gold) {
            return reject("wrong value missing or equal to the gold value");
        }
        let inserted = m[pb..me].trim().to_string();
        let (text, tagged) = mark_after_pause(&m, pe, DisfluencyType::COR.marker());
        let spans = carry_spans(t, &text, prefix, mid_end - prefix)?;
        let mut md = meta(DisfluencyType::COR, position, &inserted);
        md.original_value = Some(gold.clone());
        md.wrong_value = Some(wrong.to_string());
        return finish(t.clone(), text, tagged, spans, md);
    }
    reject("could not place correction marker")
}

/// Abandoned fragment, pause, and restarted utterance.
pub fn insert_restart(t: &Turn, position: usize, gen: &dyn ChatClient) -> Result<Turn, InjectError> {
    check_fluent(t)?;
    let ws = words(&t.text);
    let Some(target) = ws.get(position) else {
        return reject(format!("position {position} beyond {} words", ws.len()));
    };
    let vars = BTreeMap::from([
        ("utterance".to_string(), t.text.clone()),
        ("position".to_string(), (position + 1).to_string()),
        ("position0".to_string(), position.to_string()),
        ("word_at_position".to_string(), target.text.to_string()),
    ]);
    let reply = gen.chat(&ChatRequest::from_template(PromptKind::Restart, prompts::RESTART, vars))?;
    let mut m = clean_reply(&reply);

    for _ in 0..2 {
        let (prefix, suffix) = diff(&t.text, &m);
        let covered = prefix + suffix == char_len(&t.text);
        let mid_end = char_len(&m) - suffix;
        let (pb, me) = (byte_offset(&m, prefix).expect("prefix"), byte_offset(&m, mid_end).expect("mid"));
        let insertion_pause = find_pause(&m, pb).filter(|(s, _)| covered && *s < me);
        let Some((ps, pe)) = insertion_pause.or_else(|| find_pause(&m, 0)) else {
            return reject("restart has no pause");
        };
        if !m[pe..].starts_with(char::is_whitespace) && pe < m.len() {
            m = format!("{} {}", &m[..pe], &m[pe..]);
            continue;
        }
        let (fragment, spans) = if insertion_pause.is_some() {
            let fragment = m[pb..me].trim().to_string();
            let (text, _) = mark_after_pause(&m, pe, "");
            (fragment, carry_spans(t, &text, prefix, mid_end - prefix)?)
        } else {
            let before: Vec<&str> = m[..ps].split_whitespace().collect();
            let keep = before.len().min(MAX_RESTART_FRAGMENT);
            let frag_words = &before[before.len() - keep..];
            let fstart = if keep == 0 {
                ps
            } else {
                m[..ps].rfind(frag_words[0]).expect("fragment word present")
            };
            let fragment = m[fstart..pe].trim().to_string();
            let values = t.slot_values();
            let located = locate_slot_spans(&m[pe..], &values);
            if !located.unmatched.is_empty() {
                return reject("restart dropped a slot value");
            }
            let off = char_offset(&m, pe);
            let spans = located
                .spans
                .into_iter()
                .map(|s| SlotSpan {
                    start: s.start + off,
                    end: s.end + off,
                    ..s
                })
                .collect();
            (fragment, spans)
        };
        let n = fragment.split_whitespace().count();
        if n == 0 || n > MAX_RESTART_FRAGMENT {
            return reject(format!("restart fragment of {n} words"));
        }
        let (text, tagged) = mark_after_pause(&m, pe, DisfluencyType::RST.marker());
        return finish(t.clone(), text, tagged, spans, meta(DisfluencyType::RST, position, &fragment));
    }
    reject("could not place restart marker")
}

/// Applies one disfluency at `placement`.
pub fn inject<R: Rng + ?Sized>(
    t: &Turn,
    placement: Placement,
    gen: &dyn ChatClient,
    rng: &mut R,
) -> Result<Turn, InjectError> {
    match placement.kind {
        k @ (DisfluencyType::FP | DisfluencyType::DM | DisfluencyType::EDIT) => {
            let filler = fillers(k).choose(rng).expect("non-empty inventory");
            insert_filler(t, k, placement.position, filler)
        }
        DisfluencyType::REP => insert_repetition(t, placement.position),
        DisfluencyType::COR => {
            let Some(k) = placement.span else {
                return reject("correction without a target slot");
            };
            insert_correction(t, placement.position, k, gen)
        }
        DisfluencyType::RST => insert_restart(t, placement.position, gen),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DisfluencyStats {
    pub disfluent: usize,
    pub injected: BTreeMap<DisfluencyType, usize>,
    pub rejected: usize,
}

/// Samples and injects at most one disfluency into every fluent user turn.
pub fn augment_dialogue<R: Rng + ?Sized>(
    d: &Dialogue,
    cfg: &DisfluencyConfig,
    gen: &dyn ChatClient,
    rng: &mut R,
) -> crate::Result<(Dialogue, DisfluencyStats)> {
    cfg.validate()?;
    let mut out = d.clone();
    let mut stats = DisfluencyStats::default();
    for t in out.turns.iter_mut() {
        if !t.is_user() || !t.disfluency.is_empty() || t.tagged.is_some() {
            continue;
        }
        let Some(kind) = sample_and_type(t, cfg, rng) else {
            continue;
        };
        stats.disfluent += 1;
        let Some(placement) = choose_position(t, kind, cfg, rng) else {
            continue;
        };
        match inject(t, placement, gen, rng) {
            Ok(new) => {
                *stats.injected.entry(placement.kind).or_default() += 1;
                *t = new;
            }
            Err(e) => {
                log::debug!("{}: turn {} left fluent: {e}", d.dialogue_id, t.index);
                stats.rejected += 1;
            }
        }
    }
    Ok((out, stats))
}
