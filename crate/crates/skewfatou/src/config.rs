//! Plain-text configuration: `key = value` lines grouped by `[section]`
//! headers, one section per subcommand. Command-line flags override values
//! read from a file.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Config {
    /// Keys outside any section header.
    global: BTreeMap<String, String>,
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut current: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Usage(format!("line {}: unclosed section header", lineno + 1)))?
                    .trim()
                    .to_string();
                cfg.sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            match &current {
                Some(s) => {
                    cfg.sections.get_mut(s).unwrap().insert(key, value);
                }
                None => {
                    cfg.global.insert(key, value);
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        Config::parse(&std::fs::read_to_string(path)?)
    }

    /// Value for `key` in `section`, falling back to the global scope.
    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .or_else(|| self.global.get(key))
            .map(String::as_str)
    }

    /// All resolved keys for a section (global merged under section keys),
    /// for recording in the run manifest.
    pub fn resolved(&self, section: &str) -> BTreeMap<String, String> {
        let mut out = self.global.clone();
        if let Some(s) = self.sections.get(section) {
            for (k, v) in s {
                out.insert(k.clone(), v.clone());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
precision-bits = 256   # global default
threads = 4

[render]
max-iter = 2000
precision-bits = 512

[koenigs]
n = 40
";

    #[test]
    fn section_overrides_global() {
        let cfg = Config::parse(SAMPLE).unwrap();
        assert_eq!(cfg.get("render", "precision-bits"), Some("512"));
        assert_eq!(cfg.get("koenigs", "precision-bits"), Some("256"));
        assert_eq!(cfg.get("koenigs", "threads"), Some("4"));
        assert_eq!(cfg.get("render", "max-iter"), Some("2000"));
        assert_eq!(cfg.get("render", "missing"), None);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = Config::parse("# nothing\n\n a = 1 # trailing\n").unwrap();
        assert_eq!(cfg.get("any", "a"), Some("1"));
    }

    #[test]
    fn malformed_lines_rejected() {
        assert!(Config::parse("just words\n").is_err());
        assert!(Config::parse("[unclosed\n").is_err());
    }

    #[test]
    fn resolved_merges_global_and_section() {
        let cfg = Config::parse(SAMPLE).unwrap();
        let r = cfg.resolved("render");
        assert_eq!(r.get("precision-bits").map(String::as_str), Some("512"));
        assert_eq!(r.get("threads").map(String::as_str), Some("4"));
    }
}
