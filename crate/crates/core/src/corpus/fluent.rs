//! Marker-free reading of a disfluency-tagged turn.

use std::sync::LazyLock;

use regex::Regex;

use super::model::{DisfluencyMeta, DisfluencyType, Turn};
use crate::error::{Error, Result};
use crate::text::is_punct;

static BRACKET_TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[[A-Z]+\]").unwrap());
static MARKER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[(FP|DM|EDIT|REP|COR|RST)\] ?").unwrap());

/// The tagged string with markers removed and inserted material kept: the
/// surface `text` of a disfluent turn.
pub fn strip_markers(tagged: &str) -> String {
    MARKER.replace_all(tagged, "").into_owned()
}

/// Removes every marker together with the material it introduced.
///
/// For FP/DM/EDIT/REP the result is the pre-injection text. COR and RST
/// projections keep the repaired reading, which contains the final value.
pub fn fluent_projection(turn: &Turn) -> Result<String> {
    let tagged = turn.tagged();
    let markers = scan_markers(tagged)?;
    if markers.len() != turn.disfluency.len() {
        return Err(Error::MalformedTag(format!(
            "{} markers but {} disfluency records",
            markers.len(),
            turn.disfluency.len()
        )));
    }

    let mut used = vec![false; turn.disfluency.len()];
    let mut s = tagged.to_string();
    for kind in markers {
        let idx = turn
            .disfluency
            .iter()
            .enumerate()
            .position(|(i, m)| !used[i] && m.kind == kind)
            .ok_or_else(|| Error::MalformedTag(format!("no record for marker {}", kind.marker())))?;
        used[idx] = true;
        s = remove_one(&s, &turn.disfluency[idx])?;
    }
    Ok(s)
}

fn scan_markers(tagged: &str) -> Result<Vec<DisfluencyType>> {
    BRACKET_TOKEN
        .find_iter(tagged)
        .map(|m| {
            DisfluencyType::from_marker(m.as_str())
                .ok_or_else(|| Error::MalformedTag(format!("unknown marker {}", m.as_str())))
        })
        .collect()
}

fn remove_one(s: &str, meta: &DisfluencyMeta) -> Result<String> {
    let marker = meta.kind.marker();
    let at = s
        .find(marker)
        .ok_or_else(|| Error::MalformedTag(format!("marker {marker} missing")))?;
    let left = &s[..at];
    let right = &s[at + marker.len()..];

    if meta.kind.is_rule_based() {
        let span = meta.inserted_span.as_str();
        // exact inverses of the injector's two insertion shapes
        if let Some(rest) = right.strip_prefix(&format!(" {span} ")) {
            return Ok(format!("{left}{rest}"));
        }
        if let (Some(l), Some(rest)) = (left.strip_suffix(' '), right.strip_prefix(&format!(" {span}"))) {
            return Ok(format!("{l}{rest}"));
        }
        let after = right.trim_start();
        let trimmed = span.trim_end_matches(is_punct);
        let rest = [span, trimmed]
            .into_iter()
            .filter(|c| !c.is_empty())
            .find_map(|c| after.strip_prefix(c))
            .ok_or_else(|| {
                Error::MalformedTag(format!("{marker} not followed by recorded span `{span}`"))
            })?;
        return Ok(join(left, rest));
    }

    // COR/RST: drop the marker, then the recorded reparandum.
    let unmarked = if let Some(l) = left.strip_suffix(' ') {
        format!("{l}{right}")
    } else {
        format!("{left}{}", right.strip_prefix(' ').unwrap_or(right))
    };
    let span = meta.inserted_span.trim();
    let pos = unmarked
        .find(span)
        .ok_or_else(|| Error::MalformedTag(format!("{marker} span `{span}` not found")))?;
    Ok(join(&unmarked[..pos], &unmarked[pos + span.len()..]))
}

fn join(left: &str, rest: &str) -> String {
    if left.is_empty() {
        return rest.trim_start().to_string();
    }
    let left_ws = left.ends_with(char::is_whitespace);
    let rest_ws = rest.starts_with(char::is_whitespace);
    if left_ws && rest_ws {
        format!("{left}{}", rest.trim_start())
    } else if left_ws && (rest.is_empty() || rest.starts_with(is_punct)) {
        format!("{}{rest}", left.trim_end())
    } else {
        format!("{left}{rest}")
    }
}
