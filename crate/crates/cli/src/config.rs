//! Flat `key = value` run configuration with one section per command.
//!
//! Resolution order: built-in defaults, then the command's section in the
//! config file, then repeated `--set key=value` flags, then dedicated
//! flags. Unknown keys and unknown sections are rejected. Every run writes
//! the fully resolved set (including the seed) next to its outputs.

use sbkit_core::{CoreError, Result};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

pub const COMMAND_SECTIONS: &[&str] = &[
    "synth",
    "extract-features",
    "train-detector",
    "export-pooled",
    "train-sae",
    "sweep-lambda",
    "correlate",
    "attention-report",
    "gradcheck",
];

/// Resolved settings for one command run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    command: String,
    values: BTreeMap<String, String>,
    allowed: Vec<&'static str>,
}

impl RunConfig {
    /// Start from a command's declared keys and defaults.
    pub fn new(command: &str, defaults: &[(&'static str, String)]) -> Self {
        RunConfig {
            command: command.to_string(),
            values: defaults
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
            allowed: defaults.iter().map(|(k, _)| *k).collect(),
        }
    }

    fn set_checked(&mut self, key: &str, value: &str) -> Result<()> {
        if !self.allowed.contains(&key) {
            return Err(CoreError::Config(format!(
                "unknown key '{key}' for command '{}'",
                self.command
            )));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Apply the command's section from a config file.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text =
            fs::read_to_string(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
        let mut section: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !COMMAND_SECTIONS.contains(&name) {
                    return Err(CoreError::Config(format!(
                        "{}:{}: unknown section [{name}]",
                        path.display(),
                        lineno + 1
                    )));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CoreError::Config(format!(
                    "{}:{}: expected 'key = value', found '{line}'",
                    path.display(),
                    lineno + 1
                )));
            };
            let Some(section) = &section else {
                return Err(CoreError::Config(format!(
                    "{}:{}: key outside any [command] section",
                    path.display(),
                    lineno + 1
                )));
            };
            if section == &self.command {
                self.set_checked(key.trim(), value.trim())?;
            }
        }
        Ok(())
    }

    /// Apply repeated `--set key=value` overrides.
    pub fn apply_overrides(&mut self, sets: &[String]) -> Result<()> {
        for item in sets {
            let Some((key, value)) = item.split_once('=') else {
                return Err(CoreError::Config(format!(
                    "--set expects key=value, found '{item}'"
                )));
            };
            self.set_checked(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Dedicated-flag override (always a known key).
    pub fn force_set(&mut self, key: &str, value: impl ToString) {
        assert!(self.allowed.contains(&key), "undeclared key {key}");
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn get_str(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("undeclared key {key}"))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        self.get_str(key)
            .parse()
            .map_err(|_| CoreError::Config(format!("key '{key}' is not a number: '{}'", self.get_str(key))))
    }

    pub fn get_u64(&self, key: &str) -> Result<u64> {
        self.get_str(key)
            .parse()
            .map_err(|_| CoreError::Config(format!("key '{key}' is not an integer: '{}'", self.get_str(key))))
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        self.get_str(key)
            .parse()
            .map_err(|_| CoreError::Config(format!("key '{key}' is not an integer: '{}'", self.get_str(key))))
    }

    pub fn get_bool(&self, key: &str) -> Result<bool> {
        match self.get_str(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(CoreError::Config(format!(
                "key '{key}' is not a boolean: '{other}'"
            ))),
        }
    }

    /// Deterministic snapshot text.
    pub fn snapshot(&self) -> String {
        let mut out = format!("command = {}\n", self.command);
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn write_snapshot(&self, dir: &Path) -> Result<()> {
        let path = dir.join("resolved_config.txt");
        fs::write(&path, self.snapshot())
            .map_err(|e| CoreError::io(path.display().to_string(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo() -> RunConfig {
        RunConfig::new(
            "synth",
            &[("seed", "0".into()), ("kind", "embedding".into())],
        )
    }

    #[test]
    fn file_section_and_overrides_resolve_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "# comment\n[synth]\nseed = 5\n[gradcheck]\n").unwrap();
        let mut cfg = demo();
        cfg.apply_file(&path).unwrap();
        assert_eq!(cfg.get_u64("seed").unwrap(), 5);
        cfg.apply_overrides(&["seed=9".to_string()]).unwrap();
        assert_eq!(cfg.get_u64("seed").unwrap(), 9);
        assert!(cfg.snapshot().contains("command = synth"));
    }

    #[test]
    fn unknown_key_is_named() {
        let mut cfg = demo();
        let err = cfg
            .apply_overrides(&["bogus=1".to_string()])
            .unwrap_err()
            .to_string();
        assert!(err.contains("bogus"));
    }

    #[test]
    fn unknown_section_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "[nonsense]\nx = 1\n").unwrap();
        let mut cfg = demo();
        assert!(cfg.apply_file(&path).is_err());
    }
}
