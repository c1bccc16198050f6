//! Flat `key = value` configuration files.
//!
//! Keys use the long flag names without the leading dashes. Blank lines and
//! lines starting with `#` are ignored. A value given on the command line
//! always wins over the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

pub const REPORT_DIR_ENV: &str = "GAMCHAIN_REPORT_DIR";

pub const KNOWN_KEYS: [&str; 10] = [
    "engine",
    "seed",
    "particles",
    "trajectories",
    "max-rounds",
    "tol-a",
    "sweeps",
    "alpha",
    "paper-literal",
    "report-dir",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", i + 1)))?;
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::usage(format!("config line {}: unknown key '{key}'", i + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// `flag` if given, else the file's value for `key`, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|raw| {
                raw.parse()
                    .map_err(|_| CliError::usage(format!("config key '{key}': cannot parse '{raw}'")))
            })
            .transpose()
    }

    /// A switch is on if the flag is set or the file says `true`.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        if flag {
            return Ok(true);
        }
        self.pick(None, key, false)
    }

    /// Report directory: flag, then the environment variable, then the file, then `.`.
    pub fn report_dir(&self, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        if let Some(dir) = flag {
            return Ok(dir);
        }
        if let Some(dir) = std::env::var_os(REPORT_DIR_ENV).filter(|d| !d.is_empty()) {
            return Ok(PathBuf::from(dir));
        }
        self.pick(None, "report-dir", PathBuf::from("."))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_precedence() {
        let cfg = ConfigFile::parse("# comment\n\nengine = c4\nseed=9\nparticles = 50\npaper-literal = true\n").unwrap();
        assert_eq!(cfg.pick::<String>(None, "engine", "c3".into()).unwrap(), "c4");
        assert_eq!(cfg.pick(Some(3u64), "seed", 0).unwrap(), 3);
        assert_eq!(cfg.pick(None, "seed", 0u64).unwrap(), 9);
        assert_eq!(cfg.pick(None, "sweeps", 1usize).unwrap(), 1);
        assert_eq!(cfg.pick_opt::<usize>(None, "particles").unwrap(), Some(50));
        assert_eq!(cfg.pick_opt::<usize>(None, "trajectories").unwrap(), None);
        assert!(cfg.switch(false, "paper-literal").unwrap());
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ConfigFile::parse("engine c3").is_err());
        assert!(ConfigFile::parse("colour = blue").is_err());
        let cfg = ConfigFile::parse("seed = many").unwrap();
        assert!(cfg.pick(None, "seed", 0u64).is_err());
    }
}
