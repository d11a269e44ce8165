//! Final-turn slot precision, recall and F1.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::corpus::BeliefState;

/// Lowercased, trimmed, internal whitespace collapsed.
pub fn normalize_value(v: &str) -> String {
    v.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn pairs(s: &BeliefState) -> BTreeSet<(String, String)> {
    s.iter()
        .map(|(k, v)| (k.trim().to_string(), normalize_value(v)))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SlotCounts {
    pub true_pos: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl SlotCounts {
    pub fn of(pred: &BeliefState, gold: &BeliefState) -> Self {
        let (p, g) = (pairs(pred), pairs(gold));
        SlotCounts {
            true_pos: p.intersection(&g).count(),
            predicted: p.len(),
            gold: g.len(),
        }
    }

    pub fn add(&mut self, o: SlotCounts) {
        self.true_pos += o.true_pos;
        self.predicted += o.predicted;
        self.gold += o.gold;
    }

    /// `(precision, recall, f1)`. Two empty states agree perfectly.
    pub fn prf(&self) -> (f64, f64, f64) {
        if self.predicted == 0 && self.gold == 0 {
            return (1.0, 1.0, 1.0);
        }
        let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let p = div(self.true_pos, self.predicted);
        let r = div(self.true_pos, self.gold);
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        (p, r, f)
    }
}

pub fn slot_f1(pred: &BeliefState, gold: &BeliefState) -> (f64, f64, f64) {
    SlotCounts::of(pred, gold).prf()
}

/// Micro-average over many `(predicted, gold)` final states.
pub fn slot_f1_micro<'a>(states: impl IntoIterator<Item = (&'a BeliefState, &'a BeliefState)>) -> (f64, f64, f64) {
    let mut total = SlotCounts::default();
    for (p, g) in states {
        total.add(SlotCounts::of(p, g));
    }
    total.prf()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(pairs: &[(&str, &str)]) -> BeliefState {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn examples() {
        let gold = st(&[("area", "north"), ("food", "italian"), ("day", "monday"), ("people", "2")]);
        assert_eq!(slot_f1(&gold, &gold), (1.0, 1.0, 1.0));
        let half = st(&[("area", "North "), ("food", "italian")]);
        let (p, r, f) = slot_f1(&half, &gold);
        assert_eq!((p, r), (1.0, 0.5));
        assert!((f - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(slot_f1(&st(&[("x", "y")]), &gold), (0.0, 0.0, 0.0));
        assert_eq!(slot_f1(&st(&[("area", "south")]), &gold), (0.0, 0.0, 0.0));
    }

    #[test]
    fn value_normalization() {
        assert_eq!(normalize_value("  The   Golden\tHouse "), "the golden house");
        let (_, _, f) = slot_f1(&st(&[("name", "the golden  house")]), &st(&[("name", "The Golden House")]));
        assert_eq!(f, 1.0);
    }

    #[test]
    fn micro_average_pools_counts() {
        let g1 = st(&[("a", "1"), ("b", "2")]);
        let p1 = st(&[("a", "1")]);
        let g2 = st(&[("c", "3")]);
        let p2 = st(&[("c", "4")]);
        let (p, r, _) = slot_f1_micro([(&p1, &g1), (&p2, &g2)]);
        assert_eq!((p, r), (0.5, 1.0 / 3.0));
    }
}
