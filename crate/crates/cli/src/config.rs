//! Plain-text `key=value` configuration and run manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, Result};
use crate::formats;

/// Parsed `key=value` lines. `#` starts a comment, blank lines are skipped,
/// keys may not repeat.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Malformed(format!("config line {}: expected key=value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(CliError::Malformed(format!("config line {}: empty key", n + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(CliError::Malformed(format!("config line {}: duplicate key {k:?}", n + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = formats::read_bytes(path)?;
        let text = String::from_utf8(bytes)
            .map_err(|_| CliError::Malformed(format!("{}: config is not UTF-8", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Parses `key` if present.
    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Malformed(format!("config key {key}: {e}"))))
            .transpose()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Rejects keys outside `known`.
    pub fn ensure_known(&self, known: &[&str]) -> Result<()> {
        match self.keys().find(|k| !known.contains(k)) {
            Some(k) => Err(CliError::Malformed(format!("unknown config key {k:?}"))),
            None => Ok(()),
        }
    }

    /// `key=value` lines in key order.
    pub fn render(&self) -> String {
        self.entries.iter().fold(String::new(), |mut out, (k, v)| {
            let _ = writeln!(out, "{k}={v}");
            out
        })
    }
}

/// Resolved settings of a run plus provenance comments. The body is a valid
/// config file, so a manifest can be fed back through `--config`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub settings: KeyValues,
    pub inputs: Vec<(String, String)>,
    pub outputs: Vec<(String, String)>,
    pub version: String,
    pub seed: u64,
    pub started: String,
}

impl RunManifest {
    pub fn new(settings: KeyValues, seed: u64) -> Self {
        Self {
            settings,
            inputs: Vec::new(),
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            started: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# wcprox {}", self.version);
        let _ = writeln!(out, "# seed: {}", self.seed);
        let _ = writeln!(out, "# started: {}", self.started);
        for (k, v) in &self.inputs {
            let _ = writeln!(out, "# input {k}: {v}");
        }
        for (k, v) in &self.outputs {
            let _ = writeln!(out, "# output {k}: {v}");
        }
        out.push_str(&self.settings.render());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render() {
        let kv = KeyValues::parse("# run\nlambda = 0.5\n\nalgo=pgd # trailing\n").unwrap();
        assert_eq!(kv.get("lambda"), Some("0.5"));
        assert_eq!(kv.parsed::<f64>("lambda").unwrap(), Some(0.5));
        assert_eq!(kv.render(), "algo=pgd\nlambda=0.5\n");
        assert_eq!(KeyValues::parse(&kv.render()).unwrap(), kv);
        assert!(kv.parsed::<u32>("algo").is_err());
        assert!(kv.ensure_known(&["algo"]).is_err());
    }

    #[test]
    fn malformed_lines() {
        assert!(KeyValues::parse("lambda 0.5").is_err());
        assert!(KeyValues::parse("=1").is_err());
        assert!(KeyValues::parse("a=1\na=2").is_err());
    }

    #[test]
    fn manifest_body_is_a_config() {
        let mut kv = KeyValues::new();
        kv.set("seed", 7);
        kv.set("tau", 0.25);
        let mut m = RunManifest::new(kv.clone(), 7);
        m.outputs.push(("trace".into(), "out/trace.csv".into()));
        let text = m.render();
        assert!(text.starts_with("# wcprox "));
        assert!(text.contains("# output trace: out/trace.csv"));
        assert_eq!(KeyValues::parse(&text).unwrap(), kv);
    }
}
