use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};
use crate::io::read_text;

/// `key = value` settings file. Blank lines and `#` comments are skipped.
/// Flags take precedence over the file, the file over built-in defaults.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, (String, usize)>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = read_text(path)?;
        Self::parse(&text).map_err(|m| CliError::file(path, m))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", k + 1))?;
            let key = key.trim().replace('-', "_");
            if key.is_empty() {
                return Err(format!("line {}: empty key", k + 1));
            }
            values.insert(key, (value.trim().to_string(), k + 1));
        }
        Ok(ConfigFile { values })
    }

    /// Rejects keys the command does not understand.
    pub fn check_keys(&self, allowed: &[&str]) -> CliResult<()> {
        for (key, (_, line)) in &self.values {
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::usage(format!(
                    "config line {line}: unknown key `{key}` for this command"
                )));
            }
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| {
                CliError::usage(format!("config line {line}: invalid value `{v}` for `{key}`"))
            }),
        }
    }

    /// `flag`, else the file's value, else `default`.
    pub fn resolve<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> CliResult<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    /// Like [`ConfigFile::resolve`] without a default.
    pub fn resolve_opt<T: FromStr>(&self, key: &str, flag: Option<T>) -> CliResult<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}
