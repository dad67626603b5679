//! Flat `section.key = value` run configuration with `--set` overrides.
//! `#`-prefixed lines and blank lines are ignored. Relative paths resolve
//! against `SERC_DATA_DIR` when the variable is set, otherwise against the
//! working directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Result, SercError};

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    base: Option<PathBuf>,
}

fn parse_line(line: &str, lineno: usize) -> Result<Option<(String, String)>> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let Some((key, value)) = trimmed.split_once('=') else {
        return Err(SercError::Parse {
            line: lineno,
            message: format!("expected `section.key = value`, got {trimmed:?}"),
        });
    };
    let key = key.trim();
    if key.is_empty() || !key.contains('.') {
        return Err(SercError::Parse {
            line: lineno,
            message: format!("config key {key:?} must look like section.key"),
        });
    }
    Ok(Some((key.to_string(), value.trim().to_string())))
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
        let mut values = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            for (i, line) in text.lines().enumerate() {
                if let Some((k, v)) = parse_line(line, i + 1)? {
                    values.insert(k, v);
                }
            }
        }
        for item in overrides {
            let Some((k, v)) = parse_line(item, 0)? else {
                return Err(SercError::Config(format!("empty --set override {item:?}")));
            };
            values.insert(k, v);
        }
        Ok(RunConfig {
            values,
            base: std::env::var_os("SERC_DATA_DIR").map(PathBuf::from),
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    /// Parse a typed value, falling back to `default` when the key is absent.
    pub fn get_parse<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw.parse().map_err(|_| {
                SercError::Config(format!("config key {key} has unparsable value {raw:?}"))
            }),
        }
    }

    /// A required path key, resolved against the base directory.
    pub fn path(&self, key: &str) -> Result<PathBuf> {
        let raw = self
            .get(key)
            .ok_or_else(|| SercError::Config(format!("missing required config key {key}")))?;
        Ok(self.resolve(Path::new(raw)))
    }

    /// Resolve a possibly-relative path against `SERC_DATA_DIR`.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        match (&self.base, path.is_relative()) {
            (Some(base), true) => base.join(path),
            _ => path.to_path_buf(),
        }
    }
}
