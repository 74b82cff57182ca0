//! `key = value` run configuration files.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Keys accepted in a configuration file; they mirror the CLI flags.
pub const KEYS: [&str; 6] = ["case", "order", "levels", "bc", "out", "quad-extra"];

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Configuration(format!("line {}: expected key = value, got '{line}'", no + 1)))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Configuration(format!(
                "line {}: unknown key '{key}' (expected one of {})",
                no + 1,
                KEYS.join(", ")
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Configuration(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Parses a comma-separated list of element counts such as `8,16,32`.
pub fn parse_levels(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Configuration(format!("invalid level '{}' in '{s}'", t.trim())))
        })
        .collect()
}
