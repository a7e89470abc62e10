//! Key = value config files for the train and bench verbs. Flags always
//! win; the file only fills in what the command line left unset.

use std::collections::BTreeMap;
use std::path::Path;

use super::{fail, Fail};

pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    /// No path means an empty config; every lookup falls through.
    pub fn load(path: Option<&Path>) -> Result<FileConfig, Fail> {
        let Some(path) = path else {
            return Ok(FileConfig {
                entries: BTreeMap::new(),
            });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| fail("io", format!("{}: {e}", path.display())))?;
        let mut entries = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(fail(
                    "config",
                    format!("{}:{}: expected `key = value`", path.display(), no + 1),
                ));
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { entries })
    }

    pub fn get_str(&self, key: &str) -> Option<String> {
        self.entries.get(key).cloned()
    }

    pub fn get_num<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, Fail> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                fail("config", format!("config key `{key}`: cannot parse `{raw}`"))
            }),
        }
    }

    /// `seed = 1,2,3` pools training seeds, matching a repeated flag.
    pub fn get_seeds(&self) -> Result<Option<Vec<u64>>, Fail> {
        let Some(raw) = self.entries.get("seed") else {
            return Ok(None);
        };
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| fail("config", format!("config key `seed`: cannot parse `{s}`")))
            })
            .collect::<Result<Vec<u64>, Fail>>()
            .map(Some)
    }

    /// Typos in config files should fail loudly, not silently no-op.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<(), Fail> {
        for key in self.entries.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(fail("config", format!("unknown config key `{key}`")));
            }
        }
        Ok(())
    }
}
