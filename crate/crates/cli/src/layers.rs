//! Parameter lookup: command-line flag, then config file, then the caller's
//! default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Flat `key = value` file; `#` starts a comment. Keys are the long flag
/// names without dashes in front (`mu1-range = 0:0.1`).
#[derive(Debug, Default)]
pub struct Layers {
    file: BTreeMap<String, String>,
    source: String,
}

impl Layers {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
        let mut layers = Self::parse(&text, &path.display().to_string())?;
        layers.source = path.display().to_string();
        Ok(layers)
    }

    pub fn parse(text: &str, source: &str) -> Result<Self, CliError> {
        let mut file = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Usage(format!("{source}:{}: expected `key = value`", n + 1)));
            };
            let key = k.trim().trim_start_matches("--").to_string();
            if file.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::Usage(format!("{source}:{}: duplicate key `{key}`", n + 1)));
            }
        }
        Ok(Self { file, source: source.to_string() })
    }

    /// The flag value if given, else the parsed config entry for `key`.
    pub fn pick<T>(&mut self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let entry = self.file.remove(key);
        if flag.is_some() {
            return Ok(flag);
        }
        entry
            .map(|v| v.parse::<T>().map_err(|e| CliError::Usage(format!("{}: invalid value `{v}` for `{key}`: {e}", self.source))))
            .transpose()
    }

    /// Fails on config keys that no lookup consumed.
    pub fn finish(self) -> Result<(), CliError> {
        match self.file.keys().next() {
            None => Ok(()),
            Some(k) => Err(CliError::Usage(format!("{}: unknown key `{k}`", self.source))),
        }
    }
}
