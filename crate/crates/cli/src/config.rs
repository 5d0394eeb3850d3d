//! Flat key=value experiment configs.
//!
//! One `key = value` pair per line; blank lines and lines starting with
//! `#` are ignored. Every key must be consumed by the experiment that
//! reads the config, so typos surface as "unknown field" errors instead
//! of silently doing nothing.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::error::{validation, CliResult};

#[derive(Debug)]
pub struct Config {
    entries: BTreeMap<String, String>,
    used: BTreeSet<String>,
}

impl Config {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = idx + 1;
            let Some((key, value)) = line.split_once('=') else {
                return Err(validation(format!(
                    "config line {lineno}: expected key = value, got \"{line}\""
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(validation(format!(
                    "config line {lineno}: malformed key \"{key}\""
                )));
            }
            if value.is_empty() {
                return Err(validation(format!(
                    "config line {lineno}: field \"{key}\" has an empty value"
                )));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(validation(format!(
                    "config line {lineno}: duplicate field \"{key}\""
                )));
            }
        }
        Ok(Config {
            entries,
            used: BTreeSet::new(),
        })
    }

    fn raw(&mut self, key: &str) -> Option<&str> {
        let value = self.entries.get(key)?;
        self.used.insert(key.to_string());
        Some(value)
    }

    pub fn require(&mut self, key: &str) -> CliResult<String> {
        self.raw(key)
            .map(str::to_string)
            .ok_or_else(|| validation(format!("missing field \"{key}\"")))
    }

    pub fn optional(&mut self, key: &str) -> Option<String> {
        self.raw(key).map(str::to_string)
    }

    pub fn require_u64(&mut self, key: &str) -> CliResult<u64> {
        let v = self.require(key)?;
        v.parse().map_err(|_| {
            validation(format!(
                "field \"{key}\": expected a non-negative integer, got \"{v}\""
            ))
        })
    }

    pub fn require_usize(&mut self, key: &str) -> CliResult<usize> {
        Ok(self.require_u64(key)? as usize)
    }

    pub fn require_f64(&mut self, key: &str) -> CliResult<f64> {
        let v = self.require(key)?;
        v.parse()
            .map_err(|_| validation(format!("field \"{key}\": expected a number, got \"{v}\"")))
    }

    pub fn optional_f64(&mut self, key: &str, default: f64) -> CliResult<f64> {
        match self.optional(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                validation(format!("field \"{key}\": expected a number, got \"{v}\""))
            }),
        }
    }

    /// Comma-separated list of sizes, e.g. `hidden = 64,64`.
    pub fn require_usize_list(&mut self, key: &str) -> CliResult<Vec<usize>> {
        let v = self.require(key)?;
        v.split(',')
            .map(|part| {
                part.trim().parse().map_err(|_| {
                    validation(format!(
                        "field \"{key}\": expected comma-separated integers, got \"{v}\""
                    ))
                })
            })
            .collect()
    }

    /// Comma-separated list of numbers, e.g. `noise_variances = 0.1,0.2`.
    pub fn require_f64_list(&mut self, key: &str) -> CliResult<Vec<f64>> {
        let v = self.require(key)?;
        v.split(',')
            .map(|part| {
                part.trim().parse().map_err(|_| {
                    validation(format!(
                        "field \"{key}\": expected comma-separated numbers, got \"{v}\""
                    ))
                })
            })
            .collect()
    }

    /// Records the effective value of a field (used when a command-line
    /// flag overrides the config) so the manifest echo stays re-runnable.
    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), value);
        self.used.insert(key.to_string());
    }

    /// Fails on any field no experiment consumed.
    pub fn finish(&self) -> CliResult<()> {
        let unknown: Vec<&str> = self
            .entries
            .keys()
            .filter(|k| !self.used.contains(*k))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            let list = unknown
                .iter()
                .map(|k| format!("\"{k}\""))
                .collect::<Vec<_>>()
                .join(", ");
            Err(validation(format!("unknown field {list}")))
        }
    }

    /// Sorted `key = value` lines reproducing the effective config.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}
