//! Minimal `key = value` text format used for ensemble and experiment
//! configuration. `#` starts a comment; blank lines are ignored.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse(text: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(idx + 1, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(Error::parse(idx + 1, "empty key"));
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(Error::parse(
                idx + 1,
                format!("key `{key}` already set on line {}", prev.line),
            ));
        }
        out.push(Entry { key, value: value.trim().to_string(), line: idx + 1 });
    }
    Ok(out)
}

pub fn value<T: std::str::FromStr>(entry: &Entry) -> Result<T> {
    entry
        .value
        .parse()
        .map_err(|_| Error::parse(entry.line, format!("bad value for `{}`: `{}`", entry.key, entry.value)))
}

pub fn list<T: std::str::FromStr>(entry: &Entry) -> Result<Vec<T>> {
    entry
        .value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse().map_err(|_| {
                Error::parse(entry.line, format!("bad list item for `{}`: `{s}`", entry.key))
            })
        })
        .collect()
}
