//! Flat `key = value` text files.
//!
//! One entry per line, `#` starts a comment, blank lines are ignored.
//! Keys are unique within a file.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse(text: &str, origin: &str) -> Result<Vec<Entry>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Parse {
                path: origin.to_string(),
                line,
                msg: format!("expected `key = value`, found `{content}`"),
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Parse {
                path: origin.to_string(),
                line,
                msg: "empty key".into(),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::Parse {
                path: origin.to_string(),
                line,
                msg: format!("duplicate key `{key}`"),
            });
        }
        out.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(out)
}

pub fn read(path: &Path) -> Result<Vec<Entry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, &path.display().to_string())
}

pub(crate) fn parse_value<T: std::str::FromStr>(entry: &Entry, origin: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    entry.value.parse::<T>().map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: entry.line,
        msg: format!("bad value `{}` for `{}`: {e}", entry.value, entry.key),
    })
}
