use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use super::*;
use crate::clients::stub::{StubAsr, StubTts};
use crate::clients::{AudioClip, ClientError, ClientResult, TtsClient};
use crate::corpus::io::parse_records;
use crate::speakers::{AccentPool, PoolWeights, SpeakerPool};

const CORPUS: &str = include_str!("../../tests/fixtures/corpus20.jsonl");
const SPEAKERS: &str = include_str!("../../tests/fixtures/speakers.json");
const ASSISTANTS: &str = include_str!("../../tests/fixtures/assistants.json");

fn corpus(n: usize) -> Vec<Dialogue> {
    let mut v: Vec<Dialogue> = parse_records(CORPUS).unwrap();
    v.truncate(n);
    v
}

fn voices() -> Voices {
    let users: Vec<SpeakerProfile> = serde_json::from_str(SPEAKERS).unwrap();
    let assistants: Vec<SpeakerProfile> = serde_json::from_str(ASSISTANTS).unwrap();
    Voices::new(SpeakerPool::build(&users, &assistants).unwrap(), assistants).unwrap()
}

fn config(workers: usize) -> PipelineConfig {
    PipelineConfig {
        global_seed: 42,
        workers,
        ..PipelineConfig::default()
    }
}

fn tree(root: &std::path::Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn run_to_dir(cfg: &PipelineConfig, dialogues: &[Dialogue]) -> (tempfile::TempDir, RunOutput) {
    let dir = tempfile::tempdir().unwrap();
    let out = run(cfg, dialogues, &Clients::stub(), &voices(), dir.path()).unwrap();
    write_run(dir.path(), &out).unwrap();
    (dir, out)
}

#[test]
fn stub_run_is_byte_identical_across_repeats() {
    let c = corpus(10);
    let (a, out) = run_to_dir(&config(2), &c);
    let (b, _) = run_to_dir(&config(2), &c);
    assert_eq!(out.summary.processed, 10, "{:?}", out.quarantined);
    assert_eq!(tree(a.path()), tree(b.path()));
}

#[test]
fn every_turn_is_labeled_voiced_and_synthesized() {
    let (dir, out) = run_to_dir(&config(1), &corpus(4));
    for d in &out.dialogues {
        assert!(d.user_speaker.is_some() && d.assistant_speaker.is_some());
        for t in &d.turns {
            assert!(t.emotion.is_some());
            let rel = t.audio_ref.as_ref().unwrap();
            assert!(dir.path().join(rel).is_file());
        }
    }
    let turns: usize = out.dialogues.iter().map(|d| d.turns.len()).sum();
    assert_eq!(out.synthesis.len(), turns);
    assert!(out.summary.total_duration_s > 0.0);
}

#[test]
fn disabled_stages_leave_dialogues_untouched() {
    let c = corpus(10);
    let cfg = PipelineConfig {
        stages: StageToggles {
            validation: true,
            ..StageToggles::none()
        },
        ..config(1)
    };
    let dir = tempfile::tempdir().unwrap();
    let out = run(&cfg, &c, &Clients::stub(), &Voices::default(), dir.path()).unwrap();
    assert_eq!(out.dialogues, c);
    assert!(out.synthesis.is_empty());
    let cfg = PipelineConfig {
        stages: StageToggles::none(),
        ..cfg
    };
    assert_eq!(run(&cfg, &c, &Clients::stub(), &Voices::default(), dir.path()).unwrap().dialogues, c);
}

#[test]
fn malformed_dialogue_is_quarantined() {
    let mut c = corpus(10);
    c[2].turns[0].slot_spans[0].end = 500;
    let (_dir, out) = run_to_dir(&config(2), &c);
    assert_eq!(out.summary.processed, 9);
    assert_eq!(out.quarantined.len(), 1);
    assert_eq!(out.quarantined[0].dialogue_id, c[2].dialogue_id);
    assert_eq!(out.quarantined[0].stage, Stage::Input);
    assert!(out.dialogues.iter().all(|d| d.dialogue_id != c[2].dialogue_id));
}

#[test]
fn stage_failure_is_quarantined_with_its_stage() {
    let users: Vec<SpeakerProfile> = serde_json::from_str(SPEAKERS).unwrap();
    let no_asian: Vec<SpeakerProfile> = users.into_iter().filter(|p| p.accent_pool != AccentPool::Asian).collect();
    let assistants: Vec<SpeakerProfile> = serde_json::from_str(ASSISTANTS).unwrap();
    let v = Voices::new(SpeakerPool::build(&no_asian, &assistants).unwrap(), assistants).unwrap();
    let mut cfg = config(1);
    cfg.speakers.weights = PoolWeights(BTreeMap::from([(AccentPool::Asian, 1.0)]));
    let dir = tempfile::tempdir().unwrap();
    let out = run(&cfg, &corpus(2), &Clients::stub(), &v, dir.path()).unwrap();
    assert_eq!(out.quarantined.len(), 2);
    assert!(out.quarantined.iter().all(|q| q.stage == Stage::Speakers));
    assert!(out.quarantined[0].reason.contains("Asian"), "{}", out.quarantined[0].reason);
}

struct FlakyTts;

impl TtsClient for FlakyTts {
    fn tts(&self, text: &str, style: &str, r: &str) -> ClientResult<AudioClip> {
        if text.contains("goodbye") {
            return Err(ClientError::BadResponse("voice unavailable".into()));
        }
        StubTts::default().tts(text, style, r)
    }
}

#[test]
fn failed_synthesis_jobs_are_recorded_and_reported() {
    let c = corpus(1);
    let mut clients = Clients::stub();
    clients.tts = Arc::new(FlakyTts);
    let mut cfg = config(1);
    cfg.clients.tts.max_retries = 0;
    let dir = tempfile::tempdir().unwrap();
    let out = run(&cfg, &c, &clients, &voices(), dir.path()).unwrap();
    assert_eq!(out.summary.processed, 1);
    assert!(out.summary.synthesis_failed >= 1);
    let failed: Vec<_> = out.synthesis.iter().filter(|r| r.error.is_some()).collect();
    assert_eq!(failed.len(), out.summary.synthesis_failed);
    for r in failed {
        assert!(out.durations.iter().any(|v| v.turn == r.turn
            && matches!(v.issue, synthesis::DurationIssue::Missing { .. })));
    }
}

#[test]
fn speaker_stage_requires_voices() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&config(1), &corpus(1), &Clients::stub(), &Voices::default(), dir.path());
    assert!(matches!(r, Err(Error::Config(_))));
}

#[test]
fn wer_validation_on_stub_audio() {
    let (dir, out) = run_to_dir(&config(2), &corpus(20));
    let truth = reference_transcripts(&out.dialogues, dir.path());
    let clean = StubAsr::new(truth.clone());
    let v = wer_validation(&out.dialogues, dir.path(), 500, &clean, 1);
    assert_eq!(v.sampled_dialogues, 20);
    assert_eq!(v.asr_failures, 0);
    assert_eq!(v.table.overall.wer, Some(0.0));
    let per_row: usize = v.table.rows.iter().map(|r| r.utterances).sum();
    assert_eq!(per_row, v.table.overall.utterances);

    let some = wer_validation(&out.dialogues, dir.path(), 5, &clean, 1);
    assert_eq!(some.sampled_dialogues, 5);

    // Files the ASR cannot find are excluded and counted.
    let mut partial = truth;
    let dropped = partial.keys().filter(|p| p.to_string_lossy().contains("fx_000")).cloned().collect::<Vec<_>>();
    for p in &dropped {
        partial.remove(p);
    }
    let v = wer_validation(&out.dialogues, dir.path(), 500, &StubAsr::new(partial), 1);
    let fx0_user = out.dialogues[0].turns.iter().filter(|t| t.is_user()).count();
    assert_eq!(v.asr_failures, fx0_user);
    assert_eq!(v.table.overall.wer, Some(0.0));
}
