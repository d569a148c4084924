//! Flat `key = value` configuration files.
//!
//! One entry per line, dotted keys (`mrr.fwhm_hz = 875e6`), `#` starts a
//! comment, lists are comma separated. Physical quantities use SI units
//! with `_hz`, `_s` and `_v` suffixes.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
    used: Cell<bool>,
}

/// Parsed key-value file. Typed getters mark keys as consumed;
/// [`ConfigFile::finish`] rejects whatever was never read.
#[derive(Debug, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, Entry>,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.split('.').all(|part| {
            !part.is_empty()
                && part
                    .bytes()
                    .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
        })
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {line}: expected `key = value`, found `{content}`")))?;
            let key = key.trim();
            let value = value.trim();
            if !valid_key(key) {
                return Err(Error::Parse(format!("line {line}: invalid key `{key}`")));
            }
            if value.is_empty() {
                return Err(Error::Parse(format!("line {line}: field `{key}`: missing value")));
            }
            if let Some(prev) = entries.get(key) {
                let prev: &Entry = prev;
                return Err(Error::Parse(format!(
                    "line {line}: field `{key}`: duplicate of line {}",
                    prev.line
                )));
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                    used: Cell::new(false),
                },
            );
        }
        Ok(ConfigFile { entries })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Whether any key starts with `prefix.`.
    pub fn has_section(&self, prefix: &str) -> bool {
        let p = format!("{prefix}.");
        self.entries.keys().any(|k| k.starts_with(&p))
    }

    fn err(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        match self.entries.get(key) {
            Some(e) => Error::Parse(format!("line {}: field `{key}`: {msg}", e.line)),
            None => Error::Parse(format!("field `{key}`: {msg}")),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| {
            e.used.set(true);
            e.value.as_str()
        })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| self.err(key, format!("`{v}`: {e}"))))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        let item = item.trim();
                        item.parse::<T>().map_err(|e| self.err(key, format!("`{item}`: {e}")))
                    })
                    .collect()
            })
            .transpose()
    }

    /// Fails on the first key that no getter consumed.
    pub fn finish(&self) -> Result<()> {
        let mut unused: Vec<(&String, &Entry)> = self.entries.iter().filter(|(_, e)| !e.used.get()).collect();
        unused.sort_by_key(|(_, e)| e.line);
        match unused.first() {
            Some((k, e)) => Err(Error::Parse(format!("line {}: unknown key `{k}`", e.line))),
            None => Ok(()),
        }
    }
}
