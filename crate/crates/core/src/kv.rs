//! Plain-text `key=value` configuration format.
//!
//! One pair per line or several whitespace-separated pairs on a line; `#`
//! starts a comment. Keys keep their insertion order so that serialization is
//! deterministic.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = Self::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            for token in line.split_whitespace() {
                let (k, v) = token.split_once('=').ok_or_else(|| {
                    Error::Parse(format!("line {}: expected key=value, got `{token}`", lineno + 1))
                })?;
                if k.is_empty() {
                    return Err(Error::Parse(format!("line {}: empty key", lineno + 1)));
                }
                kv.set(k, v);
            }
        }
        Ok(kv)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Parse(format!("missing key `{key}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        parse_f64(self.require(key)?)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), parse_f64)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let v = self.require(key)?;
        v.trim()
            .parse()
            .map_err(|_| Error::Parse(format!("`{key}`: not an integer: `{v}`")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            Some(_) => self.usize(key),
            None => Ok(default),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        parse_f64_list(self.require(key)?)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    /// One `key=value` per line, in insertion order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    let s = s.trim();
    s.parse::<f64>()
        .map_err(|_| Error::Parse(format!("not a number: `{s}`")))
}

/// Comma-separated decimals; an empty string is an empty list.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_f64).collect()
}

pub fn format_f64_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines_and_inline_pairs() {
        let kv = KeyValues::parse("m=2 n=2 sector.theta0=1.5\n# comment\nbreakpoints=0,1\n").unwrap();
        assert_eq!(kv.get("m"), Some("2"));
        assert_eq!(kv.f64("sector.theta0").unwrap(), 1.5);
        assert_eq!(kv.f64_list("breakpoints").unwrap(), vec![0.0, 1.0]);
        assert!(kv.get("missing").is_none());
    }

    #[test]
    fn rejects_bare_tokens() {
        assert!(KeyValues::parse("n=2 oops").is_err());
    }

    #[test]
    fn text_round_trip_keeps_order() {
        let mut kv = KeyValues::new();
        kv.set("b", "1");
        kv.set("a", "2");
        kv.set("b", "3");
        let back = KeyValues::parse(&kv.to_text()).unwrap();
        assert_eq!(back, kv);
        assert_eq!(back.keys().collect::<Vec<_>>(), vec!["b", "a"]);
    }
}
