//! Shared config plumbing: JSON config files, path checks and the usage
//! error type. Every command merges flags over a config file over its
//! defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::de::DeserializeOwned;

/// Bad invocation; reported with exit code 2 like clap's own errors.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Parses the optional `--config` file; absent means all defaults.
pub fn load_file<T: DeserializeOwned + Default>(path: Option<&Path>) -> anyhow::Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| UsageError(format!("config {}: {e}", path.display())).into())
}

/// Value from the flag, else the config file, else an error naming the flag.
pub fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> anyhow::Result<T> {
    flag.or(file)
        .ok_or_else(|| UsageError(format!("the argument '--{name}' is required (flag or config file)")).into())
}

pub fn existing_file(path: PathBuf, what: &str) -> anyhow::Result<PathBuf> {
    if !path.is_file() {
        return Err(UsageError(format!("{what} {} does not exist", path.display())).into());
    }
    Ok(path)
}

/// An output path whose parent directory exists.
pub fn writable(path: PathBuf) -> anyhow::Result<PathBuf> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = parent {
        if !dir.is_dir() {
            return Err(UsageError(format!("output directory {} does not exist", dir.display())).into());
        }
    }
    Ok(path)
}

pub fn check_positive(value: f64, name: &str) -> anyhow::Result<()> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(UsageError(format!("--{name} must be positive, got {value}")).into());
    }
    Ok(())
}

/// Writes pretty JSON plus a trailing newline.
pub fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    mrflearn::io::save_json(path, value).with_context(|| format!("writing {}", path.display()))
}
