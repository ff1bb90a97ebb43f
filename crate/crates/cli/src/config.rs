//! Flat `key=value` configuration files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

/// Keys accepted in a configuration file, matching the long flag names.
pub const KNOWN_KEYS: &[&str] = &[
    "n", "k", "p", "T", "L", "seed", "trials", "mode", "suite", "x", "y", "side", "out", "csv",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub path: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.path, self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

/// A parsed file: each value with the line it came from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigMap {
    pub path: String,
    pub entries: BTreeMap<String, (String, usize)>,
}

impl ConfigMap {
    pub fn get(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.get(key).map(|(v, l)| (v.as_str(), *l))
    }
}

pub fn parse_config(text: &str, path: &str) -> Result<ConfigMap, ParseError> {
    let err = |line: usize, message: String| ParseError {
        path: path.to_string(),
        line,
        message,
    };
    let mut entries = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(err(line, format!("expected key=value, found {body:?}")));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() || value.contains('=') {
            return Err(err(line, format!("malformed entry {body:?}")));
        }
        if !KNOWN_KEYS.contains(&key) {
            return Err(err(line, format!("unknown key {key:?}")));
        }
        if entries.insert(key.to_string(), (value.to_string(), line)).is_some() {
            return Err(err(line, format!("duplicate key {key:?}")));
        }
    }
    Ok(ConfigMap {
        path: path.to_string(),
        entries,
    })
}

pub fn load_config(path: &Path) -> Result<ConfigMap, ParseError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ParseError {
        path: shown.clone(),
        line: 0,
        message: e.to_string(),
    })?;
    parse_config(&text, &shown)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_comments() {
        let c = parse_config("# nothing\n\n   # still nothing\n", "f").unwrap();
        assert!(c.entries.is_empty());
    }

    #[test]
    fn values_and_trailing_comments() {
        let c = parse_config("p = 0.5 # half\nT=10\n", "f").unwrap();
        assert_eq!(c.get("p"), Some(("0.5", 1)));
        assert_eq!(c.get("T"), Some(("10", 2)));
    }

    #[test]
    fn malformed_line_reports_number() {
        let e = parse_config("n=4\np==\n", "f").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_config("n 4\n", "f").unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        assert_eq!(parse_config("q=1\n", "f").unwrap_err().line, 1);
        assert_eq!(parse_config("n=1\nn=2\n", "f").unwrap_err().line, 2);
    }
}
