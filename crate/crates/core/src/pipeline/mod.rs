//! End-to-end corpus runs: augmentation steps, speaker assignment, synthesis
//! and validation, plus dataset splitting and the ASR intelligibility check.

mod config;
mod split;
mod validation;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;

pub use config::{
    ClientConfigs, PipelineConfig, SpeakerConfig, SplitRatios, StageToggles, ValidationConfig, ENV_PREFIX,
};
pub use split::{split, split_indices, split_sizes, Split};
pub use validation::{reference_transcripts, wer_validation, WerRow, WerTable, WerValidation, ACCENT_ROWS};

use crate::bargein::{self, BargeInStats};
use crate::clients::Clients;
use crate::corpus::{io, validate_dialogue, Dialogue, DisfluencyType};
use crate::disfluency;
use crate::emotion::{self, EmotionKeywordMap};
use crate::rng::{dialogue_seed, stage_rng};
use crate::speakers::{assign_assistant_speaker, check_assistant_pool, SpeakerPool, SpeakerProfile};
use crate::synthesis::{self, DurationViolation, ManifestRow};
use crate::{crossturn, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Input,
    Crossturn,
    Bargein,
    Disfluency,
    Emotion,
    Speakers,
    Synthesis,
    Validation,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Input => "input",
            Stage::Crossturn => "crossturn",
            Stage::Bargein => "bargein",
            Stage::Disfluency => "disfluency",
            Stage::Emotion => "emotion",
            Stage::Speakers => "speakers",
            Stage::Synthesis => "synthesis",
            Stage::Validation => "validation",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quarantined {
    pub dialogue_id: String,
    pub stage: Stage,
    pub reason: String,
}

/// Voices and style keywords shared by every dialogue of a run.
#[derive(Debug, Clone, Default)]
pub struct Voices {
    pub user_pool: Option<SpeakerPool>,
    pub assistant_pool: Vec<SpeakerProfile>,
    pub keywords: EmotionKeywordMap,
}

impl Voices {
    pub fn new(user_pool: SpeakerPool, assistant_pool: Vec<SpeakerProfile>) -> Result<Self> {
        check_assistant_pool(&assistant_pool)?;
        Ok(Voices {
            user_pool: Some(user_pool),
            assistant_pool,
            keywords: EmotionKeywordMap::default(),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunSummary {
    pub input: usize,
    pub processed: usize,
    pub quarantined: usize,
    pub bargein: BargeInStats,
    pub disfluent: usize,
    pub disfluency_injected: BTreeMap<DisfluencyType, usize>,
    pub disfluency_rejected: usize,
    pub synthesis_failed: usize,
    pub total_duration_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunOutput {
    pub dialogues: Vec<Dialogue>,
    pub quarantined: Vec<Quarantined>,
    pub synthesis: Vec<ManifestRow>,
    pub durations: Vec<DurationViolation>,
    pub summary: RunSummary,
}

struct Processed {
    dialogue: Dialogue,
    bargein: BargeInStats,
    disfluency: Option<disfluency::DisfluencyStats>,
    synthesis: Vec<ManifestRow>,
    durations: Vec<DurationViolation>,
    total_s: f64,
}

type StageResult<T> = std::result::Result<T, (Stage, String)>;

fn at<T>(stage: Stage, r: Result<T>) -> StageResult<T> {
    r.map_err(|e| (stage, e.to_string()))
}

fn schema_check(stage: Stage, d: &Dialogue) -> StageResult<()> {
    let v = validate_dialogue(d);
    if v.is_empty() {
        return Ok(());
    }
    let reasons: Vec<String> = v.iter().map(ToString::to_string).collect();
    Err((stage, reasons.join("; ")))
}

fn process(
    cfg: &PipelineConfig,
    d: &Dialogue,
    clients: &Clients,
    voices: &Voices,
    root: &Path,
) -> StageResult<Processed> {
    let on = &cfg.stages;
    let seed = dialogue_seed(cfg.global_seed, &d.dialogue_id);
    let mut p = Processed {
        dialogue: d.clone(),
        bargein: BargeInStats::default(),
        disfluency: None,
        synthesis: Vec::new(),
        durations: Vec::new(),
        total_s: 0.0,
    };
    if on.validation {
        schema_check(Stage::Input, d)?;
    }
    if on.crossturn {
        let mut rng = stage_rng(seed, "crossturn");
        p.dialogue = at(Stage::Crossturn, crossturn::augment_dialogue(&p.dialogue, &mut rng, &cfg.crossturn))?;
    }
    if on.bargein {
        let mut rng = stage_rng(seed, "bargein");
        let (out, stats) = at(
            Stage::Bargein,
            bargein::augment_dialogue(&p.dialogue, &cfg.bargein, clients.chat.as_ref(), &mut rng),
        )?;
        p.dialogue = out;
        p.bargein = stats;
    }
    if on.disfluency {
        let mut rng = stage_rng(seed, "disfluency");
        let (out, stats) = at(
            Stage::Disfluency,
            disfluency::augment_dialogue(&p.dialogue, &cfg.disfluency, clients.chat.as_ref(), &mut rng),
        )?;
        p.dialogue = out;
        p.disfluency = Some(stats);
    }
    if on.emotion {
        p.dialogue = at(Stage::Emotion, emotion::annotate_dialogue(&p.dialogue, clients.chat.as_ref()))?;
    }
    if on.speakers {
        let mut rng = stage_rng(seed, "speakers");
        let pool = voices
            .user_pool
            .as_ref()
            .ok_or_else(|| (Stage::Speakers, "no user speaker pool configured".to_string()))?;
        p.dialogue.user_speaker = Some(at(
            Stage::Speakers,
            pool.sample_user_speaker(&cfg.speakers.weights, &mut rng),
        )?);
        p.dialogue.assistant_speaker = Some(at(
            Stage::Speakers,
            assign_assistant_speaker(&voices.assistant_pool, &mut rng),
        )?);
    }
    if on.synthesis {
        let mut rng = stage_rng(seed, "synthesis");
        let (out, rows) = at(
            Stage::Synthesis,
            synthesis::synthesize_dialogue(
                &p.dialogue,
                root,
                clients.tts.as_ref(),
                &cfg.clients.tts.retry_policy(),
                &voices.keywords,
                &mut rng,
            ),
        )?;
        p.dialogue = out;
        p.synthesis = rows;
    }
    if on.validation {
        schema_check(Stage::Validation, &p.dialogue)?;
        if on.synthesis {
            let report = synthesis::verify_durations(&p.dialogue, root);
            p.durations = report.violations;
            p.total_s = report.total_s;
        }
    }
    Ok(p)
}

#[cfg(feature = "parallel")]
fn map_dialogues<T: Send>(workers: usize, corpus: &[Dialogue], f: impl Fn(&Dialogue) -> T + Sync + Send) -> Result<Vec<T>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(|| corpus.par_iter().map(f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn map_dialogues<T>(_workers: usize, corpus: &[Dialogue], f: impl Fn(&Dialogue) -> T) -> Result<Vec<T>> {
    Ok(corpus.iter().map(f).collect())
}

/// Runs the enabled stages on every dialogue. Audio is written under `root`.
///
/// Each dialogue draws from its own seeded streams, so the output does not
/// depend on the worker count. A dialogue whose stage fails is quarantined
/// and the rest of the corpus still runs.
pub fn run(cfg: &PipelineConfig, corpus: &[Dialogue], clients: &Clients, voices: &Voices, root: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    if cfg.stages.speakers {
        if voices.user_pool.is_none() {
            return Err(Error::Config("the speaker stage needs a user speaker pool".into()));
        }
        check_assistant_pool(&voices.assistant_pool)?;
    }
    let results = map_dialogues(cfg.workers, corpus, |d| process(cfg, d, clients, voices, root))?;

    let mut out = RunOutput::default();
    out.summary.input = corpus.len();
    for (d, r) in corpus.iter().zip(results) {
        match r {
            Ok(p) => {
                let s = &mut out.summary;
                s.bargein.sampled += p.bargein.sampled;
                s.bargein.judged_invalid += p.bargein.judged_invalid;
                s.bargein.rejected += p.bargein.rejected;
                s.bargein.applied += p.bargein.applied;
                if let Some(ds) = p.disfluency {
                    s.disfluent += ds.disfluent;
                    s.disfluency_rejected += ds.rejected;
                    for (k, n) in ds.injected {
                        *s.disfluency_injected.entry(k).or_default() += n;
                    }
                }
                s.synthesis_failed += p.synthesis.iter().filter(|r| r.error.is_some()).count();
                s.total_duration_s += p.total_s;
                out.synthesis.extend(p.synthesis);
                out.durations.extend(p.durations);
                out.dialogues.push(p.dialogue);
            }
            Err((stage, reason)) => {
                log::warn!("{} quarantined at {stage}: {reason}", d.dialogue_id);
                out.quarantined.push(Quarantined {
                    dialogue_id: d.dialogue_id.clone(),
                    stage,
                    reason,
                });
            }
        }
    }
    out.summary.processed = out.dialogues.len();
    out.summary.quarantined = out.quarantined.len();
    Ok(out)
}

pub const DIALOGUES_FILE: &str = "dialogues.jsonl";
pub const QUARANTINE_FILE: &str = "quarantine.jsonl";
pub const SYNTHESIS_MANIFEST_FILE: &str = "synthesis_manifest.jsonl";
pub const DURATION_FILE: &str = "duration_violations.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

/// Writes the run's dialogues and manifests into `dir`.
pub fn write_run(dir: &Path, out: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    io::write_dialogues(&dir.join(DIALOGUES_FILE), &out.dialogues)?;
    io::write_jsonl(&dir.join(QUARANTINE_FILE), &out.quarantined)?;
    io::write_jsonl(&dir.join(SYNTHESIS_MANIFEST_FILE), &out.synthesis)?;
    io::write_jsonl(&dir.join(DURATION_FILE), &out.durations)?;
    let summary = dir.join(SUMMARY_FILE);
    let body = serde_json::to_string_pretty(&out.summary)?;
    std::fs::write(&summary, body + "\n").map_err(|e| Error::io(&summary, e))
}

#[cfg(test)]
mod tests;
