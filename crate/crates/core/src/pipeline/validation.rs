use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::clients::AsrClient;
use crate::corpus::Dialogue;
use crate::metrics::{wer_tokens, WerAccumulator};
use crate::rng::{hash64, stage_rng};
use crate::speakers::AccentPool;
use crate::synthesis::normalize_text;
use crate::{Error, Result};

/// Row order of the per-accent table.
pub const ACCENT_ROWS: [AccentPool; 4] = [
    AccentPool::African,
    AccentPool::Asian,
    AccentPool::Indian,
    AccentPool::Native,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WerRow {
    pub group: String,
    /// Percentage; `None` when the group had no scored utterances.
    pub wer: Option<f64>,
    pub utterances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WerTable {
    pub rows: Vec<WerRow>,
    pub overall: WerRow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WerValidation {
    pub sampled_dialogues: usize,
    pub table: WerTable,
    /// Utterances dropped because the ASR call failed.
    pub asr_failures: usize,
    /// Utterances without a reference transcript to score against.
    pub skipped: usize,
}

fn group_thousands(n: usize) -> String {
    let s = n.to_string();
    let mut out = String::new();
    for (i, c) in s.chars().enumerate() {
        if i > 0 && (s.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

impl WerTable {
    /// Plain-text table: accent rows, a rule, then the overall row.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let line = |out: &mut String, r: &WerRow| {
            let wer = r.wer.map_or_else(|| "-".to_string(), |w| format!("{w:.2}"));
            writeln!(out, "{:<14}{:>8}{:>16}", r.group, wer, group_thousands(r.utterances)).unwrap();
        };
        writeln!(out, "{:<14}{:>8}{:>16}", "Accent Group", "WER (%)", "# Utterances").unwrap();
        out.push_str(&"-".repeat(38));
        out.push('\n');
        for r in &self.rows {
            line(&mut out, r);
        }
        out.push_str(&"-".repeat(38));
        out.push('\n');
        line(&mut out, &self.overall);
        out
    }

    /// Parses `group,wer,utterances` lines; the row named `Overall` becomes the
    /// overall row. Blank lines and `#` comments are ignored.
    pub fn from_csv(s: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut overall = None;
        for (n, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |why: &str| Error::InvalidRecord {
                source_name: "wer table".into(),
                reason: format!("line {}: {why}", n + 1),
            };
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let [group, wer, utts] = cols[..] else {
                return Err(bad("expected three columns"));
            };
            let row = WerRow {
                group: group.to_string(),
                wer: Some(wer.parse().map_err(|_| bad("WER is not a number"))?),
                utterances: utts.parse().map_err(|_| bad("utterance count is not an integer"))?,
            };
            if group.eq_ignore_ascii_case("overall") {
                overall = Some(row);
            } else {
                rows.push(row);
            }
        }
        let overall = overall.ok_or_else(|| Error::InvalidRecord {
            source_name: "wer table".into(),
            reason: "no Overall row".into(),
        })?;
        Ok(WerTable { rows, overall })
    }
}

/// Spoken text of every synthesized turn keyed by its audio file under
/// `root`; the reference transcripts a stub ASR should return.
pub fn reference_transcripts(corpus: &[Dialogue], root: &Path) -> BTreeMap<PathBuf, String> {
    corpus
        .iter()
        .flat_map(|d| d.turns.iter())
        .filter_map(|t| Some((root.join(t.audio_ref.as_ref()?), normalize_text(&t.text))))
        .collect()
}

/// Samples `sample_n` dialogues with a user voice, transcribes their user
/// turns and scores them against the normalized text sent to synthesis.
pub fn wer_validation(
    corpus: &[Dialogue],
    root: &Path,
    sample_n: usize,
    asr: &dyn AsrClient,
    seed: u64,
) -> WerValidation {
    let eligible: Vec<&Dialogue> = corpus.iter().filter(|d| d.user_speaker.is_some()).collect();
    let mut picked: Vec<usize> = if sample_n >= eligible.len() {
        (0..eligible.len()).collect()
    } else {
        let mut rng = stage_rng(hash64(&[&seed.to_le_bytes()]), "wer_validation");
        sample(&mut rng, eligible.len(), sample_n).into_vec()
    };
    picked.sort_unstable();

    let mut per_accent: BTreeMap<AccentPool, WerAccumulator> = BTreeMap::new();
    let mut overall = WerAccumulator::default();
    let (mut asr_failures, mut skipped) = (0, 0);
    for &i in &picked {
        let d = eligible[i];
        let accent = d.user_speaker.as_ref().expect("filtered").accent_pool;
        for t in d.turns.iter().filter(|t| t.is_user()) {
            let Some(rel) = &t.audio_ref else {
                skipped += 1;
                continue;
            };
            let reference = normalize_text(&t.text);
            if wer_tokens(&reference).is_empty() {
                skipped += 1;
                continue;
            }
            let hyp = match asr.transcribe(&root.join(rel)) {
                Ok(h) => h,
                Err(e) => {
                    log::warn!("{} turn {}: transcription failed: {e}", d.dialogue_id, t.index);
                    asr_failures += 1;
                    continue;
                }
            };
            per_accent.entry(accent).or_default().add(&reference, &hyp);
            overall.add(&reference, &hyp);
        }
    }
    let row = |group: String, acc: Option<&WerAccumulator>| WerRow {
        group,
        wer: acc.and_then(WerAccumulator::rate).map(|r| r * 100.0),
        utterances: acc.map_or(0, |a| a.utterances),
    };
    WerValidation {
        sampled_dialogues: picked.len(),
        table: WerTable {
            rows: ACCENT_ROWS.iter().map(|a| row(a.to_string(), per_accent.get(a))).collect(),
            overall: row("Overall".into(), Some(&overall)),
        },
        asr_failures,
        skipped,
    }
}
