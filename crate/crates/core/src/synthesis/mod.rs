//! Turn rendering: spoken-form text, emotion style instruction, TTS dispatch
//! and duration checks.

mod normalize;

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use normalize::{cardinal, digits, normalize_text, normalize_with, ordinal, year, MAX_CARDINAL};

use crate::clients::{wav_duration, RetryPolicy, TtsClient};
use crate::corpus::Dialogue;
use crate::emotion::EmotionKeywordMap;
use crate::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 24_000;
pub const MIN_TURN_S: f64 = 0.3;
pub const MAX_TURN_S: f64 = 30.0;

pub fn style_instruction(keyword: &str) -> String {
    format!("Please speak in a {keyword} tone.")
}

/// Relative output path of a turn's audio.
pub fn audio_path(dialogue_id: &str, turn: usize) -> String {
    format!("data/audio/{dialogue_id}/turn{turn:02}.wav")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisJob {
    pub dialogue_id: String,
    pub turn_index: usize,
    pub normalized_text: String,
    pub style_instruction: String,
    pub speaker_ref: String,
    pub out_path: String,
}

/// Builds the job for one turn. The turn must carry an emotion label and the
/// dialogue must have a speaker for the turn's role.
pub fn build_job<R: Rng + ?Sized>(
    d: &Dialogue,
    turn_idx: usize,
    keywords: &EmotionKeywordMap,
    rng: &mut R,
) -> Result<SynthesisJob> {
    let t = d
        .turns
        .get(turn_idx)
        .ok_or_else(|| Error::contract(format!("turn {turn_idx} out of range")))?;
    let label = t
        .emotion
        .ok_or_else(|| Error::contract(format!("{} turn {turn_idx} has no emotion label", d.dialogue_id)))?;
    let speaker = if t.is_user() {
        d.user_speaker.as_ref()
    } else {
        d.assistant_speaker.as_ref()
    }
    .ok_or_else(|| Error::contract(format!("{} has no {:?} speaker", d.dialogue_id, t.role)))?;
    Ok(SynthesisJob {
        dialogue_id: d.dialogue_id.clone(),
        turn_index: turn_idx,
        normalized_text: normalize_text(&t.text),
        style_instruction: style_instruction(keywords.keyword_for(label, rng)),
        speaker_ref: speaker.ref_audio.clone(),
        out_path: audio_path(&d.dialogue_id, turn_idx),
    })
}

/// Renders a job and writes the WAV under `root`. Returns the duration.
pub fn synthesize(job: &SynthesisJob, root: &Path, tts: &dyn TtsClient, retry: &RetryPolicy) -> Result<f64> {
    if job.normalized_text.trim().is_empty() {
        return Err(Error::contract(format!(
            "{} turn {}: empty synthesis text",
            job.dialogue_id, job.turn_index
        )));
    }
    let clip = retry.run(|_| tts.tts(&job.normalized_text, &job.style_instruction, &job.speaker_ref))?;
    let path = root.join(&job.out_path);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(&path, &clip.wav).map_err(|e| Error::io(&path, e))?;
    Ok(clip.duration_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub dialogue_id: String,
    pub turn: usize,
    pub status: JobStatus,
    pub duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Synthesizes every turn. Failed jobs are recorded in the manifest and the
/// remaining turns still run; job construction errors abort.
pub fn synthesize_dialogue<R: Rng + ?Sized>(
    d: &Dialogue,
    root: &Path,
    tts: &dyn TtsClient,
    retry: &RetryPolicy,
    keywords: &EmotionKeywordMap,
    rng: &mut R,
) -> Result<(Dialogue, Vec<ManifestRow>)> {
    let mut out = d.clone();
    let mut rows = Vec::with_capacity(d.turns.len());
    for i in 0..d.turns.len() {
        let job = build_job(d, i, keywords, rng)?;
        let row = match synthesize(&job, root, tts, retry) {
            Ok(dur) => {
                out.turns[i].audio_ref = Some(job.out_path.clone());
                out.turns[i].duration_s = Some(dur);
                ManifestRow {
                    dialogue_id: d.dialogue_id.clone(),
                    turn: i,
                    status: JobStatus::Ok,
                    duration_s: Some(dur),
                    error: None,
                }
            }
            Err(e) => {
                log::warn!("{} turn {i}: synthesis failed: {e}", d.dialogue_id);
                ManifestRow {
                    dialogue_id: d.dialogue_id.clone(),
                    turn: i,
                    status: JobStatus::Failed,
                    duration_s: None,
                    error: Some(e.to_string()),
                }
            }
        };
        rows.push(row);
    }
    Ok((out, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DurationIssue {
    Missing { path: PathBuf },
    Unreadable { path: PathBuf, reason: String },
    OutOfRange { duration_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DurationViolation {
    pub dialogue_id: String,
    pub turn: usize,
    pub issue: DurationIssue,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DurationReport {
    pub violations: Vec<DurationViolation>,
    pub total_s: f64,
}

/// Reads each turn's WAV under `root` and checks the per-turn bounds.
/// Reported paths are relative to `root`.
pub fn verify_durations(d: &Dialogue, root: &Path) -> DurationReport {
    let mut report = DurationReport::default();
    for (i, t) in d.turns.iter().enumerate() {
        let rel = t.audio_ref.clone().unwrap_or_else(|| audio_path(&d.dialogue_id, i));
        let path = PathBuf::from(&rel);
        let issue = match fs::read(root.join(&rel)) {
            Err(_) => Some(DurationIssue::Missing { path }),
            Ok(bytes) => match wav_duration(&bytes) {
                Err(e) => Some(DurationIssue::Unreadable {
                    path,
                    reason: e.to_string(),
                }),
                Ok(dur) => {
                    report.total_s += dur;
                    (!(MIN_TURN_S..=MAX_TURN_S).contains(&dur)).then_some(DurationIssue::OutOfRange { duration_s: dur })
                }
            },
        };
        if let Some(issue) = issue {
            report.violations.push(DurationViolation {
                dialogue_id: d.dialogue_id.clone(),
                turn: i,
                issue,
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::clients::stub::{silent_wav, StubTts};
    use crate::clients::{AudioClip, ClientError, ClientResult};
    use crate::corpus::{EmotionLabel, Goal, SubGoal, Turn};
    use crate::rng::seeded;
    use crate::speakers::{AccentPool, Gender, SpeakerProfile};

    fn speaker(id: &str) -> SpeakerProfile {
        SpeakerProfile {
            speaker_id: id.into(),
            accent_pool: AccentPool::Native,
            country: "US".into(),
            age: Some(30),
            age_bin: None,
            gender: Gender::Female,
            ref_audio: format!("refs/{id}.wav"),
            ref_duration_s: 5.0,
        }
    }

    fn dialogue(texts: &[&str]) -> Dialogue {
        let goal = Goal {
            text: "g".into(),
            sub_goals: vec![SubGoal {
                domain: "d".into(),
                intent: "i".into(),
                constraints: Default::default(),
                requests: Default::default(),
            }],
        };
        let turns = texts
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut t = if i % 2 == 0 { Turn::user(*s) } else { Turn::assistant(*s) };
                t.emotion = Some(EmotionLabel::Neutral);
                t
            })
            .collect();
        let mut d = Dialogue::new("abcd_10083", "abcd", goal, turns);
        d.user_speaker = Some(speaker("u1"));
        d.assistant_speaker = Some(speaker("a1"));
        d
    }

    fn calm_only() -> EmotionKeywordMap {
        EmotionKeywordMap::new(EmotionLabel::ALL.iter().map(|l| (*l, vec!["calm".to_string()])).collect()).unwrap()
    }

    #[test]
    fn job_fields() {
        let d = dialogue(&["a table for 2", "ok", "thanks", "bye"]);
        let mut rng = seeded(1);
        let j = build_job(&d, 3, &calm_only(), &mut rng).unwrap();
        assert_eq!(j.out_path, "data/audio/abcd_10083/turn03.wav");
        assert_eq!(j.style_instruction, "Please speak in a calm tone.");
        assert_eq!(j.speaker_ref, "refs/a1.wav");
        let j0 = build_job(&d, 0, &calm_only(), &mut rng).unwrap();
        assert_eq!(j0.speaker_ref, "refs/u1.wav");
        assert_eq!(j0.normalized_text, "a table for two");
    }

    #[test]
    fn job_deterministic_given_seed() {
        let d = dialogue(&["hi", "hello"]);
        let m = EmotionKeywordMap::default();
        let a = build_job(&d, 0, &m, &mut seeded(9)).unwrap();
        let b = build_job(&d, 0, &m, &mut seeded(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unlabeled_turn_is_contract_error() {
        let mut d = dialogue(&["hi"]);
        d.turns[0].emotion = None;
        assert!(matches!(build_job(&d, 0, &calm_only(), &mut seeded(0)), Err(Error::Contract(_))));
    }

    #[test]
    fn stub_duration_follows_rate() {
        let dir = tempfile::tempdir().unwrap();
        let job = SynthesisJob {
            dialogue_id: "x".into(),
            turn_index: 0,
            normalized_text: "a".repeat(50),
            style_instruction: style_instruction("calm"),
            speaker_ref: "r".into(),
            out_path: audio_path("x", 0),
        };
        let dur = synthesize(&job, dir.path(), &StubTts::default(), &RetryPolicy::none()).unwrap();
        assert!((dur - 50.0 * 0.06).abs() < 1e-9);
        let bytes = fs::read(dir.path().join("data/audio/x/turn00.wav")).unwrap();
        assert!((wav_duration(&bytes).unwrap() - 3.0).abs() < 1e-3);

        let empty = SynthesisJob {
            normalized_text: " ".into(),
            ..job
        };
        assert!(matches!(
            synthesize(&empty, dir.path(), &StubTts::default(), &RetryPolicy::none()),
            Err(Error::Contract(_))
        ));
    }

    struct FailOn(&'static str);

    impl TtsClient for FailOn {
        fn tts(&self, text: &str, s: &str, r: &str) -> ClientResult<AudioClip> {
            if text.contains(self.0) {
                Err(ClientError::Timeout)
            } else {
                StubTts::default().tts(text, s, r)
            }
        }
    }

    #[test]
    fn failed_job_recorded_and_others_continue() {
        let dir = tempfile::tempdir().unwrap();
        let d = dialogue(&["good morning", "boom now", "thanks a lot"]);
        let (out, rows) = synthesize_dialogue(
            &d,
            dir.path(),
            &FailOn("boom"),
            &RetryPolicy::immediate(2),
            &calm_only(),
            &mut seeded(0),
        )
        .unwrap();
        let status: Vec<JobStatus> = rows.iter().map(|r| r.status).collect();
        assert_eq!(status, [JobStatus::Ok, JobStatus::Failed, JobStatus::Ok]);
        assert_eq!(out.turns[1].duration_s, None);
        assert_eq!(out.turns[2].audio_ref.as_deref(), Some("data/audio/abcd_10083/turn02.wav"));
        let row = serde_json::to_value(&rows[1]).unwrap();
        assert_eq!(row["status"], "failed");
    }

    fn write_wav(root: &Path, id: &str, turn: usize, secs: f64) {
        let p = root.join(audio_path(id, turn));
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, silent_wav(1000, (secs * 1000.0) as usize).unwrap()).unwrap();
    }

    #[test]
    fn durations_checked() {
        let dir = tempfile::tempdir().unwrap();
        let d = dialogue(&["a", "b", "c", "d", "e"]);
        for i in 0..5 {
            write_wav(dir.path(), &d.dialogue_id, i, 2.0);
        }
        let r = verify_durations(&d, dir.path());
        assert!(r.violations.is_empty());
        assert!((r.total_s - 10.0).abs() < 1e-9);

        write_wav(dir.path(), &d.dialogue_id, 2, 31.0);
        fs::remove_file(dir.path().join(audio_path(&d.dialogue_id, 4))).unwrap();
        let r = verify_durations(&d, dir.path());
        let kinds: BTreeMap<usize, &DurationIssue> = r.violations.iter().map(|v| (v.turn, &v.issue)).collect();
        assert!(matches!(kinds[&2], DurationIssue::OutOfRange { duration_s } if (*duration_s - 31.0).abs() < 1e-9));
        assert!(matches!(kinds[&4], DurationIssue::Missing { .. }));
        assert_eq!(kinds.len(), 2);
    }
}
