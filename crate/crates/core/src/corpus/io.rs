//! Unified-schema files: one JSON document, a JSON array, or newline-delimited JSON.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::model::Dialogue;
use crate::error::{Error, Result};

pub fn read_dialogues(path: &Path) -> Result<Vec<Dialogue>> {
    read_records(path)
}

pub fn write_dialogues(path: &Path, dialogues: &[Dialogue]) -> Result<()> {
    write_jsonl(path, dialogues)
}

/// Reads a JSON array, a single JSON object, or JSONL, decided by the first
/// non-blank character and line count.
pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&body)
}

pub fn parse_records<T: DeserializeOwned>(body: &str) -> Result<Vec<T>> {
    let trimmed = body.trim_start();
    if trimmed.starts_with('[') {
        return Ok(serde_json::from_str(trimmed)?);
    }
    let lines: Vec<&str> = body.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() <= 1 || serde_json::from_str::<serde_json::Value>(lines[0]).is_err() {
        // Pretty-printed single document.
        return Ok(vec![serde_json::from_str(trimmed)?]);
    }
    lines
        .into_iter()
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Line-by-line reader for large JSONL inputs.
pub fn for_each_jsonl<T: DeserializeOwned>(
    path: &Path,
    mut f: impl FnMut(T) -> Result<()>,
) -> Result<()> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        f(serde_json::from_str(&line)?)?;
    }
    Ok(())
}
