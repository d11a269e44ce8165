//! Speaker similarity between turn embeddings.

use std::path::Path;

use serde::Serialize;

use crate::clients::EmbedClient;
use crate::corpus::Dialogue;
use crate::Result;

/// Cosine similarity; `None` if either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (na > 0.0 && nb > 0.0).then(|| dot / (na * nb))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    /// Population standard deviation.
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return MeanStd::default();
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        MeanStd {
            mean,
            std: var.sqrt(),
            n: xs.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SpeakerSimilarity {
    /// First turn against each later turn.
    pub sim_first: MeanStd,
    /// Each turn against the one before it.
    pub sim_prev: MeanStd,
}

/// Pooled over dialogues; each inner list holds one dialogue's user-turn
/// embeddings in order. Pairs involving a zero vector are skipped.
pub fn speaker_similarity(dialogues: &[Vec<Vec<f64>>]) -> SpeakerSimilarity {
    let (mut first, mut prev) = (Vec::new(), Vec::new());
    let mut skipped = 0usize;
    for vs in dialogues {
        for i in 1..vs.len() {
            match cosine(&vs[0], &vs[i]) {
                Some(c) => first.push(c),
                None => skipped += 1,
            }
            match cosine(&vs[i - 1], &vs[i]) {
                Some(c) => prev.push(c),
                None => skipped += 1,
            }
        }
    }
    if skipped > 0 {
        log::warn!("speaker similarity: skipped {skipped} pairs with a zero embedding");
    }
    SpeakerSimilarity {
        sim_first: MeanStd::of(&first),
        sim_prev: MeanStd::of(&prev),
    }
}

/// Embeds every user turn that has audio under `root`.
pub fn user_turn_embeddings(d: &Dialogue, root: &Path, embed: &dyn EmbedClient) -> Result<Vec<Vec<f64>>> {
    d.turns
        .iter()
        .filter(|t| t.is_user())
        .filter_map(|t| t.audio_ref.as_ref())
        .map(|p| Ok(embed.embed_checked(&root.join(p))?))
        .collect()
}
