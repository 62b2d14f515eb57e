//! `key=value` config files. Flags given on the command line win.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key=value", i + 1))
            })?;
            values.insert(
                key.trim().replace('_', "-"),
                value.trim().to_string(),
            );
        }
        Ok(ConfigFile { values })
    }

    /// The flag value if given, else the config value under the flag's name.
    pub fn resolve<T>(&self, flag: Option<T>, name: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(name)
            .map(|raw| {
                raw.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("--{name} (from config): {e}")))
            })
            .transpose()
    }

    pub fn require<T>(&self, flag: Option<T>, name: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.resolve(flag, name)?
            .ok_or_else(|| CliError::Usage(format!("--{name} is required")))
    }

    pub fn switch(&self, flag: bool, name: &str) -> Result<bool, CliError> {
        Ok(flag || self.resolve::<bool>(None, name)?.unwrap_or(false))
    }
}
