//! Deterministic offline stand-ins for every service.
//!
//! The chat stub answers each prompt family with fixed templates and keyword
//! rules, keyed only on the request variables, so identical inputs always
//! produce identical outputs.

use std::collections::{BTreeMap, VecDeque};
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    AsrClient, AudioClip, ChatClient, ChatRequest, ChatRole, ClientError, ClientResult, EmbedClient,
    PromptKind, TtsClient,
};
use crate::rng::hash64;
use crate::text::{is_punct, split_trailing_punct};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JudgeMode {
    AlwaysYes,
    AlwaysNo,
    /// Keyword rules over the exchange (see [`StubChat`]).
    #[default]
    Rules,
}

/// Offline generator/judge.
///
/// * barge-in judge: `JudgeMode`; under `Rules`, efficiency is valid when the
///   assistant response reads like a completed booking, error recovery when it
///   mentions a state value, clarification when it is long or carries a code.
/// * barge-in generation: fixed per-cell templates.
/// * emotion: keyword table, default neutral.
/// * self-correction / restart: rule rewrites around the target.
/// * goal alignment: items whose value (or requested slot name) occurs in the utterance.
/// * anything else: echoes the last user message.
#[derive(Debug, Default)]
pub struct StubChat {
    pub judge: JudgeMode,
    scripted: Mutex<VecDeque<String>>,
}

impl StubChat {
    pub fn with_judge(judge: JudgeMode) -> Self {
        StubChat {
            judge,
            ..Self::default()
        }
    }

    /// Replies popped in order before falling back to the rules.
    pub fn scripted(replies: impl IntoIterator<Item = impl Into<String>>) -> Self {
        StubChat {
            judge: JudgeMode::Rules,
            scripted: Mutex::new(replies.into_iter().map(Into::into).collect()),
        }
    }
}

impl ChatClient for StubChat {
    fn chat(&self, req: &ChatRequest) -> ClientResult<String> {
        if let Some(r) = self.scripted.lock().expect("stub lock").pop_front() {
            return Ok(r);
        }
        Ok(match req.kind {
            PromptKind::BargeInJudge => judge_reply(self.judge, req),
            PromptKind::BargeInGenerate => generate_bargein(req),
            PromptKind::Emotion => emotion_rule(req.var("utterance")).to_string(),
            PromptKind::SelfCorrection => self_correction(req),
            PromptKind::Restart => restart(req),
            PromptKind::GoalAlignment => goal_alignment(req.var("goal_items"), req.var("user_utterance")),
            PromptKind::FreeForm => req
                .messages
                .iter()
                .rev()
                .find(|m| m.role == ChatRole::User)
                .map(|m| m.content.clone())
                .unwrap_or_default(),
        })
    }
}

const BOOKING_CUES: &[&str] = &[
    "booked",
    "booking is",
    "confirmed",
    "confirmation",
    "reference number",
    "reserved",
    "all set",
    "your total",
];

fn judge_reply(mode: JudgeMode, req: &ChatRequest) -> String {
    let yes = match mode {
        JudgeMode::AlwaysYes => true,
        JudgeMode::AlwaysNo => false,
        JudgeMode::Rules => {
            let text = req.var("assistant_text").to_lowercase();
            match req.var("bargein_type") {
                "efficiency" => BOOKING_CUES.iter().any(|c| text.contains(c)),
                "error_recovery" => state_values(req.var("state_json"))
                    .iter()
                    .any(|(_, v)| !v.is_empty() && text.contains(&v.to_lowercase())),
                "clarification" => {
                    text.split_whitespace().count() >= 8 || text.chars().any(|c| c.is_ascii_digit())
                }
                _ => false,
            }
        }
    };
    if yes { "Yes" } else { "No" }.to_string()
}

fn state_values(json: &str) -> Vec<(String, String)> {
    serde_json::from_str::<BTreeMap<String, String>>(json)
        .map(|m| m.into_iter().collect())
        .unwrap_or_default()
}

fn readable_slot(slot: &str) -> String {
    slot.rsplit(['.', '-']).next().unwrap_or(slot).replace('_', " ")
}

fn truncate_words(text: &str) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    let keep = (words.len() / 2).max(1).min(words.len());
    words[..keep].join(" ").trim_end_matches(is_punct).to_string()
}

fn generate_bargein(req: &ChatRequest) -> String {
    let assistant = req.var("assistant_text");
    let style = req.var("style");
    let mut lines = Vec::new();
    match req.var("bargein_type") {
        "error_recovery" => {
            let Some((slot, value)) = state_values(req.var("state_json")).into_iter().next() else {
                return "NOT APPLICABLE".into();
            };
            let wrong = plausible_alternative(&value);
            let cut: String = {
                let n = wrong.chars().count();
                let keep = if n > 4 { n.div_ceil(2) } else { n };
                wrong.chars().take(keep).collect()
            };
            let name = readable_slot(&slot);
            lines.push(format!("[Assistant]: Sure, I have the {name} as {cut}<bargein>"));
            match style {
                "RAW" => {
                    lines.push("[User]: No, that's wrong.".into());
                    lines.push("[Assistant]: I apologize. What would you like me to correct?".into());
                    lines.push(format!("[User]: I said {value}, not {wrong}."));
                    lines.push(format!("[Assistant]: I'm sorry for the confusion. I'll use {value} instead."));
                }
                "INTERP" => {
                    lines.push(format!("[User]: No, I said {value}, not {wrong}."));
                    lines.push(format!("[Assistant]: I apologize for the mistake. I'll change that to {value}."));
                }
                _ => {
                    lines.push("[User]: Uh, no.".into());
                    lines.push("[Assistant]: Sorry, what should I change?".into());
                    lines.push(format!("[User]: {value}."));
                    lines.push(format!("[Assistant]: Got it, {value}."));
                }
            }
            let err = BTreeMap::from([(slot.clone(), wrong)]);
            let cor = BTreeMap::from([(slot, value)]);
            lines.push(format!("Erroneous slots: {}", serde_json::to_string(&err).expect("map")));
            lines.push(format!("Corrected slots: {}", serde_json::to_string(&cor).expect("map")));
        }
        "clarification" => {
            let truncated = truncate_words(assistant);
            lines.push(format!("[Assistant]: {truncated}<bargein>"));
            match style {
                "RAW" => {
                    lines.push("[User]: Sorry, what was that?".into());
                    lines.push(format!("[Assistant]: Let me repeat that. {assistant}"));
                }
                "INTERP" => {
                    let term = salient_term(&truncated);
                    lines.push(format!("[User]: What do you mean by {term}?"));
                    lines.push(format!("[Assistant]: I mean {term}. {assistant}"));
                }
                _ => {
                    lines.push("[User]: Hm?".into());
                    lines.push(format!("[Assistant]: Sorry, let me say that again. {assistant}"));
                }
            }
        }
        "efficiency" => {
            lines.push(format!("[Assistant]: {}<bargein>", truncate_words(assistant)));
            match style {
                "RAW" => {
                    lines.push("[User]: Got it, that works.".into());
                    lines.push("[Assistant]: Alright, I'll finalize that now.".into());
                }
                "INTERP" => {
                    let pref = state_values(req.var("state_json"))
                        .into_iter()
                        .next()
                        .map(|(_, v)| format!("Yes, {v} works for me."))
                        .unwrap_or_else(|| "Yes, that works for me.".into());
                    lines.push(format!("[User]: {pref}"));
                    lines.push("[Assistant]: Understood, I'll go ahead.".into());
                }
                _ => {
                    lines.push("[User]: Uh-huh.".into());
                    lines.push("[Assistant]: Great, I'll proceed.".into());
                }
            }
        }
        _ => return "NOT APPLICABLE".into(),
    }
    lines.join("\n")
}

fn salient_term(text: &str) -> String {
    let words: Vec<&str> = text
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .collect();
    words
        .iter()
        .find(|w| w.chars().any(|c| c.is_ascii_digit()) || (w.len() > 1 && w.chars().all(|c| c.is_uppercase())))
        .or_else(|| words.iter().max_by_key(|w| w.len()))
        .map(|w| w.to_string())
        .unwrap_or_else(|| "that".into())
}

const EMOTION_RULES: &[(&[&str], u8)] = &[
    (&["idiot", "stupid", "useless", "shut up", "ridiculous"], 4),
    (&["thank", "that's all i need", "that is all i need"], 6),
    (&["sorry", "my mistake", "my bad", "apologi"], 3),
    (&["that's wrong", "not what i", "i said", "try again", "wrong"], 2),
    (&["disappoint", "unfortunately", "too bad", "sad"], 1),
    (&["recommend", "sounds great", "exciting", "love", "!"], 5),
];

/// Keyword rule table used by the offline emotion judge.
pub fn emotion_rule(utterance: &str) -> u8 {
    let u = utterance.to_lowercase();
    EMOTION_RULES
        .iter()
        .find(|(keys, _)| keys.iter().any(|k| u.contains(k)))
        .map(|(_, id)| *id)
        .unwrap_or(0)
}

const WEEKDAYS: [&str; 7] = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"];

const NUMBER_WORDS: [&str; 13] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve",
];

const SWAPS: &[(&str, &str)] = &[
    ("north", "south"),
    ("east", "west"),
    ("left", "right"),
    ("paris", "london"),
    ("cheap", "expensive"),
    ("bronze", "gold"),
];

const FALLBACKS: &[&str] = &["centre", "moderate", "italian", "chinese", "Cambridge", "London"];

fn match_case(template: &str, word: &str) -> String {
    if template.chars().next().is_some_and(char::is_uppercase) {
        let mut c = word.chars();
        c.next()
            .map(|f| f.to_uppercase().collect::<String>() + c.as_str())
            .unwrap_or_default()
    } else {
        word.to_string()
    }
}

/// A different value of the same kind (another day, number, direction...).
pub fn plausible_alternative(value: &str) -> String {
    let lower = value.to_lowercase();
    if let Some(i) = WEEKDAYS.iter().position(|d| *d == lower) {
        return match_case(value, WEEKDAYS[(i + 6) % 7]);
    }
    if let Some(n) = NUMBER_WORDS.iter().position(|w| *w == lower) {
        let m = if n > 2 { n - 2 } else { n + 1 };
        return match_case(value, NUMBER_WORDS[m]);
    }
    for (a, b) in SWAPS {
        if lower == *a {
            return match_case(value, b);
        }
        if lower == *b {
            return match_case(value, a);
        }
    }
    if let Some(start) = value.find(|c: char| c.is_ascii_digit()) {
        let len = value[start..]
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(value.len() - start);
        let run = &value[start..start + len];
        if let Ok(n) = run.parse::<u64>() {
            let m = if n > 2 { n - 2 } else { n + 1 };
            let digits = format!("{m:0width$}", width = len);
            return format!("{}{digits}{}", &value[..start], &value[start + len..]);
        }
    }
    let h = hash64(&[value.as_bytes()]) as usize;
    (0..FALLBACKS.len())
        .map(|k| FALLBACKS[(h + k) % FALLBACKS.len()])
        .find(|f| !f.eq_ignore_ascii_case(value))
        .expect("fallbacks differ")
        .to_string()
}

const CORRECTION_CUES: [&str; 4] = ["— no, ", "— wait, I mean ", "— actually, ", "... "];

fn self_correction(req: &ChatRequest) -> String {
    let utt = req.var("utterance");
    let value = req.var("slot_value");
    if value.is_empty() {
        return utt.to_string();
    }
    let at = req
        .var("slot_offset")
        .parse::<usize>()
        .ok()
        .and_then(|ci| crate::text::byte_offset(utt, ci))
        .filter(|b| utt[*b..].starts_with(value))
        .or_else(|| utt.find(value));
    let Some(b) = at else {
        return utt.to_string();
    };
    let wrong = plausible_alternative(value);
    let cue = CORRECTION_CUES[(hash64(&[utt.as_bytes(), value.as_bytes()]) % 4) as usize];
    format!("{}{wrong}{cue}{value}{}", &utt[..b], &utt[b + value.len()..])
}

fn restart(req: &ChatRequest) -> String {
    let utt = req.var("utterance");
    let words: Vec<&str> = utt.split_whitespace().collect();
    if words.is_empty() {
        return utt.to_string();
    }
    let p = req.var("position0").parse::<usize>().unwrap_or(0).min(words.len() - 1);
    let end = (p + 1).max(2).min(words.len());
    let start = end.saturating_sub(4);
    let fragment: Vec<&str> = words[start..end]
        .iter()
        .map(|w| split_trailing_punct(w).0)
        .collect();
    let pause = if hash64(&[utt.as_bytes()]).is_multiple_of(2) { "... " } else { "— " };
    let mut out = words[..start].join(" ");
    if !out.is_empty() {
        out.push(' ');
    }
    out.push_str(&fragment.join(" "));
    out.push_str(pause);
    out.push_str(&words[start..].join(" "));
    out
}

fn goal_alignment(items: &str, utterance: &str) -> String {
    let u = utterance.to_lowercase();
    let mut hits = Vec::new();
    for line in items.lines() {
        let Some((num, rest)) = line.trim().split_once(". ") else {
            continue;
        };
        let Ok(n) = num.parse::<usize>() else {
            continue;
        };
        let hit = if let Some(slot) = rest.strip_suffix(" (request)") {
            u.contains(&readable_slot(slot).to_lowercase())
        } else if let Some((_, value)) = rest.split_once(" = ") {
            !value.is_empty() && u.contains(&value.to_lowercase())
        } else {
            false
        };
        if hit {
            hits.push(n.to_string());
        }
    }
    format!("[{}]", hits.join(", "))
}

/// Silent WAV of `secs_per_char` seconds per input character.
#[derive(Debug, Clone)]
pub struct StubTts {
    pub secs_per_char: f64,
    pub sample_rate: u32,
}

impl Default for StubTts {
    fn default() -> Self {
        StubTts {
            secs_per_char: 0.06,
            sample_rate: 24_000,
        }
    }
}

impl TtsClient for StubTts {
    fn tts(&self, text: &str, _style: &str, _ref_audio: &str) -> ClientResult<AudioClip> {
        let duration_s = text.chars().count() as f64 * self.secs_per_char;
        let samples = (duration_s * self.sample_rate as f64).round() as usize;
        let wav = silent_wav(self.sample_rate, samples)
            .map_err(|e| ClientError::BadResponse(format!("wav encoding: {e}")))?;
        Ok(AudioClip { wav, duration_s })
    }
}

pub(crate) fn silent_wav(sample_rate: u32, samples: usize) -> Result<Vec<u8>, hound::Error> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut buf = Cursor::new(Vec::new());
    {
        let mut w = hound::WavWriter::new(&mut buf, spec)?;
        let mut w16 = w.get_i16_writer(samples as u32);
        for _ in 0..samples {
            w16.write_sample(0);
        }
        w16.flush()?;
        w.finalize()?;
    }
    Ok(buf.into_inner())
}

/// Returns the ground-truth text registered for each audio file, with
/// optional per-word substitutions seeded per clip.
#[derive(Debug, Clone, Default)]
pub struct StubAsr {
    pub transcripts: BTreeMap<PathBuf, String>,
    pub corruption: f64,
    pub seed: u64,
}

impl StubAsr {
    pub fn new(transcripts: BTreeMap<PathBuf, String>) -> Self {
        StubAsr {
            transcripts,
            ..Self::default()
        }
    }

    pub fn with_corruption(mut self, rate: f64, seed: u64) -> Self {
        self.corruption = rate;
        self.seed = seed;
        self
    }
}

impl AsrClient for StubAsr {
    fn transcribe(&self, audio: &Path) -> ClientResult<String> {
        std::fs::metadata(audio).map_err(|e| ClientError::unreadable(audio, e))?;
        let truth = self
            .transcripts
            .get(audio)
            .ok_or_else(|| ClientError::unreadable(audio, "no transcript registered"))?;
        if self.corruption <= 0.0 {
            return Ok(truth.clone());
        }
        // Seeded by the clip's directory and file name.
        let key: PathBuf = audio.iter().rev().take(2).collect::<Vec<_>>().into_iter().rev().collect();
        let key = key.to_string_lossy();
        let mut rng = ChaCha8Rng::seed_from_u64(hash64(&[&self.seed.to_le_bytes(), key.as_bytes()]));
        let words: Vec<&str> = truth
            .split_whitespace()
            .map(|w| {
                if rng.random_bool(self.corruption.min(1.0)) {
                    if w == "blah" { "meh" } else { "blah" }
                } else {
                    w
                }
            })
            .collect();
        Ok(words.join(" "))
    }
}

/// Unit vector seeded by speaker id; every clip of a speaker embeds identically.
#[derive(Debug, Clone)]
pub struct StubEmbed {
    pub dim: usize,
    pub speakers: BTreeMap<PathBuf, String>,
    output_dim: Option<usize>,
}

impl Default for StubEmbed {
    fn default() -> Self {
        StubEmbed {
            dim: 64,
            speakers: BTreeMap::new(),
            output_dim: None,
        }
    }
}

impl StubEmbed {
    pub fn new(dim: usize, speakers: BTreeMap<PathBuf, String>) -> Self {
        StubEmbed {
            dim,
            speakers,
            output_dim: None,
        }
    }

    /// Misconfigured stub whose vectors have the wrong length.
    pub fn with_output_dim(mut self, n: usize) -> Self {
        self.output_dim = Some(n);
        self
    }

    pub fn vector_for(&self, speaker_id: &str) -> Vec<f64> {
        let n = self.output_dim.unwrap_or(self.dim);
        let mut rng = ChaCha8Rng::seed_from_u64(hash64(&[b"speaker", speaker_id.as_bytes()]));
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect()
    }
}

impl EmbedClient for StubEmbed {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, audio: &Path) -> ClientResult<Vec<f64>> {
        std::fs::metadata(audio).map_err(|e| ClientError::unreadable(audio, e))?;
        let key = audio.to_string_lossy();
        let speaker = self.speakers.get(audio).map(String::as_str).unwrap_or(&key);
        Ok(self.vector_for(speaker))
    }
}
