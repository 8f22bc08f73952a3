//! Flat `key = value` configuration files.
//!
//! Lines are `key = value`, blank, or `#` comments. Keys use the same
//! spelling as the corresponding long flags. Unknown and malformed keys are
//! rejected up front so a typo cannot silently fall back to a default.

use std::collections::BTreeMap;
use std::path::Path;

pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        FileConfig { entries: BTreeMap::new() }
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!(
                    "config line {}: expected `key = value`, got {raw:?} (start comments with #)",
                    idx + 1
                ));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(format!("config line {}: empty key before `=`", idx + 1));
            }
            if entries.insert(key.clone(), value).is_some() {
                return Err(format!(
                    "config line {}: key {key:?} given twice (keep exactly one)",
                    idx + 1
                ));
            }
        }
        Ok(FileConfig { entries })
    }

    /// Rejects keys outside `allowed`; call once per subcommand with its
    /// full key set so the error can list every accepted spelling.
    pub fn ensure_known(&self, allowed: &[&str]) -> Result<(), String> {
        for key in self.entries.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(format!(
                    "unknown config key {key:?} (allowed: {})",
                    allowed.join(", ")
                ));
            }
        }
        Ok(())
    }

    pub fn get_string(&self, key: &str) -> Option<String> {
        self.entries.get(key).cloned()
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, String> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| format!("config key {key:?}: expected a real number, got {v:?}"))
            })
            .transpose()
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, String> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse::<usize>().map_err(|_| {
                    format!("config key {key:?}: expected a nonnegative integer, got {v:?}")
                })
            })
            .transpose()
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, String> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse::<u64>().map_err(|_| {
                    format!("config key {key:?}: expected a nonnegative integer, got {v:?}")
                })
            })
            .transpose()
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>, String> {
        self.entries
            .get(key)
            .map(|v| match v.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(format!(
                    "config key {key:?}: expected true or false, got {other:?}"
                )),
            })
            .transpose()
    }
}
