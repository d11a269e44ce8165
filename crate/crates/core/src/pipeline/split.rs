use rand::seq::SliceRandom;
use serde::Serialize;

use super::config::SplitRatios;
use crate::corpus::Dialogue;
use crate::rng::{hash64, stage_rng};

/// Fractional parts closer than this count as equal, so that ratios such as
/// 0.15 that are inexact in binary still break ties in partition order.
const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Split {
    pub train: Vec<Dialogue>,
    pub valid: Vec<Dialogue>,
    pub test: Vec<Dialogue>,
}

impl Split {
    pub fn sizes(&self) -> [usize; 3] {
        [self.train.len(), self.valid.len(), self.test.len()]
    }
}

/// Largest-remainder apportionment of `n` items. Equal remainders go to the
/// earlier partition.
pub fn split_sizes(n: usize, ratios: &SplitRatios) -> [usize; 3] {
    let quotas = ratios.as_array().map(|r| {
        let q = r * n as f64;
        if (q - q.round()).abs() <= TIE_EPS { q.round() } else { q }
    });
    let mut sizes = quotas.map(|q| q.floor() as usize);
    let assigned: usize = sizes.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a].fract(), quotas[b].fract());
        if (ra - rb).abs() <= TIE_EPS {
            a.cmp(&b)
        } else {
            rb.total_cmp(&ra)
        }
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Partition indices: a seeded shuffle of the id-sorted corpus is cut at the
/// apportioned sizes. Each part lists indices in ascending order.
pub fn split_indices(ids: &[&str], ratios: &SplitRatios, seed: u64) -> [Vec<usize>; 3] {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(ids[b]).then(a.cmp(&b)));
    order.shuffle(&mut stage_rng(hash64(&[&seed.to_le_bytes()]), "split"));
    let [n_train, n_valid, _] = split_sizes(ids.len(), ratios);
    let mut parts = [
        order[..n_train].to_vec(),
        order[n_train..n_train + n_valid].to_vec(),
        order[n_train + n_valid..].to_vec(),
    ];
    for p in parts.iter_mut() {
        p.sort_unstable();
    }
    parts
}

/// Disjoint, exhaustive train/valid/test split; each part keeps corpus order.
pub fn split(corpus: &[Dialogue], ratios: &SplitRatios, seed: u64) -> Split {
    let ids: Vec<&str> = corpus.iter().map(|d| d.dialogue_id.as_str()).collect();
    let [train, valid, test] = split_indices(&ids, ratios, seed).map(|p| p.into_iter().map(|i| corpus[i].clone()).collect());
    Split { train, valid, test }
}
