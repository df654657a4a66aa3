//! Plain-text `key=value` configuration files and flag precedence.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use hrli::{Error, Result};

/// Settings read from a config file. Keys use the long flag names without
/// the leading dashes, e.g. `min-count = 5`.
#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("config line {}: expected key=value, got {raw:?}", n + 1))
            })?;
            let key = k.trim().replace('_', "-");
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("config line {}: duplicate key {key:?}", n + 1)));
            }
        }
        Ok(ConfigFile {
            values,
            used: RefCell::default(),
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(ConfigFile::default()),
            Some(p) => Self::parse(&std::fs::read_to_string(p).map_err(|e| {
                Error::Config(format!("cannot read config {}: {e}", p.display()))
            })?),
        }
    }

    fn lookup<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        let Some(raw) = self.values.get(key) else {
            return Ok(None);
        };
        self.used.borrow_mut().insert(key.to_string());
        raw.parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("config key {key:?} has invalid value {raw:?}")))
    }

    /// Flag value if given, else the config file value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        let from_file = self.lookup(key)?;
        Ok(flag.or(from_file).unwrap_or(default))
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        let from_file = self.lookup(key)?;
        Ok(flag.or(from_file))
    }

    /// A switch set on the command line wins; otherwise the file decides.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        let from_file: Option<bool> = self.lookup(key)?;
        Ok(flag || from_file.unwrap_or(false))
    }

    /// Rejects keys the command never asked for, which are most likely typos.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&String> = self.values.keys().filter(|k| !used.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown config keys: {unknown:?}")))
        }
    }
}

/// Comma-separated list, as accepted by `--ks` and `--columns`.
pub fn parse_list<T: FromStr>(raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid list element {t:?} in {raw:?}")))
        })
        .collect()
}
