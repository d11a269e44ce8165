use crate::corpus::SlotSpan;
use crate::text::char_offset;

/// Result of aligning annotated values against an utterance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpanMatch {
    pub spans: Vec<SlotSpan>,
    /// `(slot, value)` pairs with no free exact occurrence.
    pub unmatched: Vec<(String, String)>,
}

/// Leftmost non-overlapping exact (case-sensitive) matches, taken in the order given.
pub fn locate_slot_spans<S: AsRef<str>, V: AsRef<str>>(utterance: &str, values: &[(S, V)]) -> SpanMatch {
    let mut out = SpanMatch::default();
    for (slot, value) in values {
        let (slot, value) = (slot.as_ref(), value.as_ref());
        if value.is_empty() {
            out.unmatched.push((slot.to_string(), value.to_string()));
            continue;
        }
        let found = utterance.match_indices(value).find_map(|(b, _)| {
            let start = char_offset(utterance, b);
            let end = start + value.chars().count();
            let free = out.spans.iter().all(|s| end <= s.start || start >= s.end);
            free.then_some((start, end))
        });
        match found {
            Some((start, end)) => out.spans.push(SlotSpan {
                slot: slot.to_string(),
                start,
                end,
            }),
            None => out.unmatched.push((slot.to_string(), value.to_string())),
        }
    }
    out.spans.sort_by_key(|s| s.start);
    out
}
