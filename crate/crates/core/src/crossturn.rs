//! Cross-turn dictation of long alphanumeric slot values.
//!
//! A user turn carrying a phone number, email address or booking code is
//! rewritten into a sub-dialogue where the value is dictated chunk by chunk
//! and each chunk is confirmed by the assistant. Occasionally one chunk is
//! misspoken and re-dictated with "Wait, I meant ...".

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clients::stub::plausible_alternative;
use crate::corpus::{CrossTurnMeta, Dialogue, Role, SlotSpan, Turn};
use crate::error::{Error, Result};
use crate::text::{char_len, char_slice};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossTurnConfig {
    pub p_error: f64,
    pub min_digits: usize,
    pub min_code_len: usize,
    /// Rate of "table for two → Actually, three" corrections on ordinary slots.
    pub self_correction_rate: f64,
}

impl Default for CrossTurnConfig {
    fn default() -> Self {
        CrossTurnConfig {
            p_error: 0.20,
            min_digits: 7,
            min_code_len: 5,
            self_correction_rate: 0.0,
        }
    }
}

impl CrossTurnConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_error", self.p_error), ("self_correction_rate", self.self_correction_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("crossturn.{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Numeric,
    Email,
    Code,
}

impl ValueKind {
    /// Separator used when chunk texts are concatenated back together.
    pub fn joiner(self) -> &'static str {
        match self {
            ValueKind::Email => " ",
            _ => "",
        }
    }
}

fn is_phone_separator(c: char) -> bool {
    matches!(c, ' ' | '-' | '+' | '(' | ')' | '.' | '/')
}

pub fn classify(value: &str, cfg: &CrossTurnConfig) -> Option<ValueKind> {
    let v = value.trim();
    if let Some((local, domain)) = v.split_once('@') {
        if !local.is_empty() && !domain.is_empty() && !v.contains(char::is_whitespace) {
            return Some(ValueKind::Email);
        }
        return None;
    }
    let digits = v.chars().filter(char::is_ascii_digit).count();
    if digits >= cfg.min_digits && v.chars().all(|c| c.is_ascii_digit() || is_phone_separator(c)) {
        return Some(ValueKind::Numeric);
    }
    let alnum = v.chars().filter(char::is_ascii_alphanumeric).count();
    let has_letter = v.chars().any(|c| c.is_ascii_alphabetic());
    if alnum >= cfg.min_code_len
        && digits > 0
        && has_letter
        && v.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
    {
        return Some(ValueKind::Code);
    }
    None
}

pub fn is_segmentable(value: &str, cfg: &CrossTurnConfig) -> bool {
    classify(value, cfg).is_some()
}

/// Splits a digit string into 3-digit chunks, with a remainder of one folded
/// into the last chunk and a remainder of two spread over the last two.
pub fn chunk_digits(digits: &str) -> Vec<String> {
    let n = digits.len();
    if n <= 4 {
        return vec![digits.to_string()];
    }
    let mut sizes = vec![3; n / 3];
    match n % 3 {
        1 => *sizes.last_mut().expect("n > 4") += 1,
        2 if sizes.len() >= 2 => {
            let k = sizes.len();
            sizes[k - 1] += 1;
            sizes[k - 2] += 1;
        }
        2 => sizes.push(2),
        _ => {}
    }
    let mut out = Vec::with_capacity(sizes.len());
    let mut at = 0;
    for s in sizes {
        out.push(digits[at..at + s].to_string());
        at += s;
    }
    out
}

fn vocalize_email_part(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        let word = match c {
            '.' => Some("dot"),
            '_' => Some("underscore"),
            '-' => Some("dash"),
            '+' => Some("plus"),
            _ => None,
        };
        match word {
            Some(w) => {
                if !out.is_empty() && !out.ends_with(' ') {
                    out.push(' ');
                }
                out.push_str(w);
                out.push(' ');
            }
            None => out.push(c),
        }
    }
    out.trim().to_string()
}

fn segment_as(value: &str, kind: ValueKind) -> Vec<String> {
    let v = value.trim();
    match kind {
        ValueKind::Numeric => chunk_digits(&v.chars().filter(char::is_ascii_digit).collect::<String>()),
        ValueKind::Email => {
            let (local, domain) = v.split_once('@').expect("classified as email");
            vec![
                vocalize_email_part(local),
                format!("at {}", vocalize_email_part(domain)),
            ]
        }
        ValueKind::Code => {
            let mut out = Vec::new();
            let mut run = String::new();
            let flush = |run: &mut String, out: &mut Vec<String>| {
                if run.is_empty() {
                    return;
                }
                if run.starts_with(|c: char| c.is_ascii_digit()) && run.len() >= 5 {
                    out.extend(chunk_digits(run));
                } else {
                    out.push(run.clone());
                }
                run.clear();
            };
            for c in v.chars().filter(char::is_ascii_alphanumeric) {
                if run.chars().next().is_some_and(|r| r.is_ascii_digit() != c.is_ascii_digit()) {
                    flush(&mut run, &mut out);
                }
                run.push(c);
            }
            flush(&mut run, &mut out);
            out
        }
    }
}

pub fn segment_value(value: &str, cfg: &CrossTurnConfig) -> Result<Vec<String>> {
    let kind = classify(value, cfg)
        .ok_or_else(|| Error::contract(format!("`{value}` is not a segmentable slot value")))?;
    Ok(segment_as(value, kind))
}

/// The value as it is heard once every chunk is dictated.
pub fn vocalized(value: &str, kind: ValueKind) -> String {
    segment_as(value, kind).join(kind.joiner())
}

const DIGIT_WORDS: [&str; 10] = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"];

/// Spoken rendering of a chunk: digits as words, code letters spelled out.
pub fn spoken(chunk: &str, kind: ValueKind) -> String {
    if kind == ValueKind::Email {
        return chunk.to_string();
    }
    chunk
        .chars()
        .map(|c| match c.to_digit(10) {
            Some(d) => DIGIT_WORDS[d as usize].to_string(),
            None => c.to_string(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

const EMAIL_KEYWORDS: [&str; 6] = ["dot", "at", "underscore", "dash", "plus", ""];

/// One same-class character substitution.
pub fn corrupt_chunk<R: Rng + ?Sized>(chunk: &str, kind: ValueKind, rng: &mut R) -> String {
    let chars: Vec<char> = chunk.chars().collect();
    let mut candidates = Vec::new();
    let mut word_start = 0;
    for (i, c) in chars.iter().enumerate() {
        if *c == ' ' {
            word_start = i + 1;
            continue;
        }
        if kind == ValueKind::Email {
            let word: String = chars[word_start..].iter().take_while(|c| **c != ' ').collect();
            if EMAIL_KEYWORDS.contains(&word.as_str()) {
                continue;
            }
        }
        if c.is_ascii_alphanumeric() {
            candidates.push(i);
        }
    }
    let Some(&i) = candidates.choose(rng) else {
        return chunk.to_string();
    };
    let c = chars[i];
    let replacement = if c.is_ascii_digit() {
        let d = c.to_digit(10).expect("digit");
        let r = (d + rng.random_range(1..10)) % 10;
        char::from_digit(r, 10).expect("digit")
    } else {
        let base = if c.is_ascii_uppercase() { b'A' } else { b'a' };
        let off = c as u8 - base;
        (base + (off + rng.random_range(1..26)) % 26) as char
    };
    let mut out = chars;
    out[i] = replacement;
    out.into_iter().collect()
}

fn meta(slot: &str, index: usize, chunk: &str) -> CrossTurnMeta {
    CrossTurnMeta {
        slot_name: slot.to_string(),
        chunk_index: index,
        chunk_text: chunk.to_string(),
        is_error: false,
        is_correction: false,
        corrected_in_turn: None,
    }
}

/// Rewrites user turn `turn_idx` into a chunk-by-chunk dictation of `slot`.
///
/// Each chunk is its own user turn followed by an assistant confirmation,
/// except the last, which is followed by the turn that originally answered
/// the user. With probability `p_error` one chunk is misspoken, confirmed as
/// heard, then corrected.
pub fn expand_turn<R: Rng + ?Sized>(
    d: &Dialogue,
    turn_idx: usize,
    slot: &str,
    chunks: &[String],
    rng: &mut R,
    cfg: &CrossTurnConfig,
) -> Result<Dialogue> {
    let turn = d
        .turns
        .get(turn_idx)
        .filter(|t| t.is_user())
        .ok_or_else(|| Error::contract(format!("turn {turn_idx} is not a user turn")))?;
    let span = turn
        .slot_spans
        .iter()
        .find(|s| s.slot == slot)
        .ok_or_else(|| Error::contract(format!("turn {turn_idx} has no `{slot}` span")))?
        .clone();
    let value = turn
        .span_text(&span)
        .ok_or_else(|| Error::contract(format!("`{slot}` span out of range")))?;
    let kind = classify(value, cfg).ok_or_else(|| Error::contract(format!("`{value}` is not segmentable")))?;
    if chunks.is_empty() {
        return Err(Error::contract("no chunks to dictate"));
    }

    let error_at = rng.random_bool(cfg.p_error).then(|| rng.random_range(0..chunks.len()));
    let wrong = error_at.map(|i| corrupt_chunk(&chunks[i], kind, rng));

    let prefix = char_slice(&turn.text, 0, span.start).expect("span checked");
    let suffix = char_slice(&turn.text, span.end, char_len(&turn.text)).expect("span checked");
    let last = chunks.len() - 1;

    let mut block: Vec<Turn> = Vec::new();
    for (i, chunk) in chunks.iter().enumerate() {
        let said = match (error_at, &wrong) {
            (Some(e), Some(w)) if e == i => w.as_str(),
            _ => chunk.as_str(),
        };
        let mut text = String::new();
        let mut spans: Vec<SlotSpan> = Vec::new();
        if i == 0 {
            text.push_str(prefix);
            spans.extend(turn.slot_spans.iter().filter(|s| s.end <= span.start).cloned());
        }
        text.push_str(&spoken(said, kind));
        if i == last {
            let shift = char_len(&text);
            spans.extend(
                turn.slot_spans
                    .iter()
                    .filter(|s| s.start >= span.end)
                    .map(|s| SlotSpan {
                        slot: s.slot.clone(),
                        start: s.start - span.end + shift,
                        end: s.end - span.end + shift,
                    }),
            );
            text.push_str(suffix);
        }
        let mut u = Turn::user(text);
        u.slot_spans = spans;
        u.emotion = turn.emotion;
        let mut m = meta(slot, i, said);
        let is_error = error_at == Some(i);
        m.is_error = is_error;
        u.crossturn = Some(m);
        block.push(u);

        if is_error {
            let mut conf = Turn::assistant(format!("Got it, {}.", spoken(said, kind)));
            conf.crossturn = Some(meta(slot, i, said));
            block.push(conf);
            let correction_at = block.len();
            let err_at = block.len() - 2;
            if let Some(ct) = block[err_at].crossturn.as_mut() {
                ct.corrected_in_turn = Some(correction_at);
            }
            let mut fix = Turn::user(format!("Wait, I meant {}.", spoken(chunk, kind)));
            fix.emotion = turn.emotion;
            let mut m = meta(slot, i, chunk);
            m.is_correction = true;
            fix.crossturn = Some(m);
            block.push(fix);
            if i != last {
                let mut ack = Turn::assistant(format!("Sorry about that, {}.", spoken(chunk, kind)));
                ack.crossturn = Some(meta(slot, i, chunk));
                block.push(ack);
            }
        } else if i != last {
            let mut conf = Turn::assistant(format!("Got it, {}.", spoken(chunk, kind)));
            conf.crossturn = Some(meta(slot, i, chunk));
            block.push(conf);
        }
    }

    let answered = d.turns.get(turn_idx + 1).is_some_and(|t| t.role == Role::Assistant);
    if !answered {
        let final_chunk = &chunks[last];
        let mut conf = Turn::assistant(format!("Got it, {}.", spoken(final_chunk, kind)));
        conf.crossturn = Some(meta(slot, last, final_chunk));
        block.push(conf);
    }

    let mut out = d.clone();
    out.splice(turn_idx..turn_idx + 1, block);
    Ok(out)
}

/// Categorical self-correction across two turns: the user gives a wrong
/// value, hears it confirmed, then says "Actually, <gold>."
pub fn self_correct_turn(d: &Dialogue, turn_idx: usize, span_idx: usize) -> Result<Dialogue> {
    let turn = &d.turns[turn_idx];
    let span = turn.slot_spans[span_idx].clone();
    let gold = turn
        .span_text(&span)
        .ok_or_else(|| Error::contract("span out of range"))?
        .to_string();
    let wrong = plausible_alternative(&gold);
    let prefix = char_slice(&turn.text, 0, span.start).expect("span checked");
    let suffix = char_slice(&turn.text, span.end, char_len(&turn.text)).expect("span checked");
    let delta = char_len(&wrong) as isize - char_len(&gold) as isize;

    let mut first = turn.clone();
    first.text = format!("{prefix}{wrong}{suffix}");
    first.tagged = None;
    first.disfluency.clear();
    for s in first.slot_spans.iter_mut() {
        if s.start >= span.end {
            s.start = (s.start as isize + delta) as usize;
            s.end = (s.end as isize + delta) as usize;
        } else if s.start == span.start {
            s.end = (s.end as isize + delta) as usize;
        }
    }
    let mut m = meta(&span.slot, 0, &wrong);
    m.is_error = true;
    m.corrected_in_turn = Some(2);
    first.crossturn = Some(m);

    let mut conf = Turn::assistant(format!("Okay, {wrong}."));
    conf.crossturn = Some(meta(&span.slot, 0, &wrong));

    let lead = "Actually, ";
    let text = format!("{lead}{gold}.");
    let at = char_len(lead);
    let mut fix = Turn::user(text).with_span(&span.slot, at, at + char_len(&gold));
    fix.emotion = turn.emotion;
    let mut m = meta(&span.slot, 0, &gold);
    m.is_correction = true;
    fix.crossturn = Some(m);

    let mut block = vec![first, conf, fix];
    if !d.turns.get(turn_idx + 1).is_some_and(|t| t.role == Role::Assistant) {
        block.push(Turn::assistant(format!("Got it, {gold}.")));
    }
    let mut out = d.clone();
    out.splice(turn_idx..turn_idx + 1, block);
    Ok(out)
}

/// Applies dictation to the first segmentable slot of every user turn, and
/// optional self-corrections to turns without one.
pub fn augment_dialogue<R: Rng + ?Sized>(d: &Dialogue, rng: &mut R, cfg: &CrossTurnConfig) -> Result<Dialogue> {
    cfg.validate()?;
    let mut out = d.clone();
    let targets: Vec<usize> = (0..d.turns.len())
        .filter(|&i| d.turns[i].is_user() && d.turns[i].crossturn.is_none())
        .collect();
    for &i in targets.iter().rev() {
        let turn = &out.turns[i];
        let seg = turn.slot_spans.iter().find_map(|s| {
            let v = turn.span_text(s)?;
            is_segmentable(v, cfg).then(|| (s.slot.clone(), v.to_string()))
        });
        if let Some((slot, value)) = seg {
            let chunks = segment_value(&value, cfg)?;
            out = expand_turn(&out, i, &slot, &chunks, rng, cfg)?;
        } else if !turn.slot_spans.is_empty()
            && cfg.self_correction_rate > 0.0
            && rng.random_bool(cfg.self_correction_rate)
        {
            let k = rng.random_range(0..turn.slot_spans.len());
            out = self_correct_turn(&out, i, k)?;
        }
    }
    Ok(out)
}

/// Re-assembles every dictated value of `slot`, errors replaced by their corrections.
pub fn reconstruct(d: &Dialogue, slot: &str, kind: ValueKind) -> Vec<String> {
    let mut groups: Vec<Vec<(usize, String)>> = Vec::new();
    for t in d.user_turns() {
        let Some(m) = t.crossturn.as_ref().filter(|m| m.slot_name == slot) else {
            continue;
        };
        if m.chunk_index == 0 && !m.is_correction {
            groups.push(Vec::new());
        }
        if m.is_error {
            continue;
        }
        if let Some(g) = groups.last_mut() {
            g.push((m.chunk_index, m.chunk_text.clone()));
        }
    }
    groups
        .into_iter()
        .map(|mut g| {
            g.sort_by_key(|(i, _)| *i);
            g.into_iter().map(|(_, c)| c).collect::<Vec<_>>().join(kind.joiner())
        })
        .collect()
}
