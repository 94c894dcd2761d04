//! Flat `key = value` run-configuration files.
//!
//! One assignment per line. Blank lines and lines whose first non-space
//! character is `#` are skipped. Keys are the long flag names of the
//! subcommand being run (kebab-case, no leading dashes); values are parsed
//! exactly like flag values. An explicit flag always overrides the file,
//! and keys a subcommand does not know are ignored, so one file can serve
//! several subcommands.

use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Parsed contents of a `key = value` file (or an empty stand-in).
#[derive(Debug, Default)]
pub struct FileConfig {
    entries: HashMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> FileConfig {
        FileConfig::default()
    }

    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut entries = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "{}:{}: expected `key = value`, got {raw:?}",
                    path.display(),
                    lineno + 1
                );
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { entries })
    }

    /// Parses the file's value for `key`, if present.
    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow!("config key `{key}`: cannot parse {raw:?}: {e}")),
        }
    }
}

/// Flag value if given, else the file's value for `key`, else `default`.
pub fn resolve<T>(flag: Option<T>, file: &FileConfig, key: &str, default: T) -> Result<T>
where
    T: FromStr,
    T::Err: Display,
{
    Ok(resolve_opt(flag, file, key)?.unwrap_or(default))
}

/// Flag value if given, else the file's value for `key`, else `None`.
pub fn resolve_opt<T>(flag: Option<T>, file: &FileConfig, key: &str) -> Result<Option<T>>
where
    T: FromStr,
    T::Err: Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

/// Like [`resolve_opt`], but the setting must come from the flag or the
/// file.
pub fn resolve_required<T>(flag: Option<T>, file: &FileConfig, key: &str) -> Result<T>
where
    T: FromStr,
    T::Err: Display,
{
    resolve_opt(flag, file, key)?
        .ok_or_else(|| anyhow!("missing required setting: pass --{key} or set `{key}` in the config file"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().expect("temp file");
        f.write_all(text.as_bytes()).expect("write");
        f
    }

    #[test]
    fn parses_assignments_and_skips_comments() {
        let f = write_file("# a comment\n\nframes = 12\nkind = telemetry-like\n  # indented\nsnr= 2.5 \n");
        let cfg = FileConfig::load(f.path()).expect("load");
        assert_eq!(cfg.get::<usize>("frames").unwrap(), Some(12));
        assert_eq!(cfg.get::<String>("kind").unwrap().as_deref(), Some("telemetry-like"));
        assert_eq!(cfg.get::<f64>("snr").unwrap(), Some(2.5));
        assert_eq!(cfg.get::<u64>("absent").unwrap(), None);
    }

    #[test]
    fn malformed_line_is_an_error() {
        let f = write_file("frames 12\n");
        assert!(FileConfig::load(f.path()).is_err());
    }

    #[test]
    fn flag_overrides_file_and_default_fills_in() {
        let f = write_file("frames = 12\n");
        let cfg = FileConfig::load(f.path()).expect("load");
        assert_eq!(resolve(Some(3usize), &cfg, "frames", 99).unwrap(), 3);
        assert_eq!(resolve(None::<usize>, &cfg, "frames", 99).unwrap(), 12);
        assert_eq!(resolve(None::<usize>, &cfg, "count", 99).unwrap(), 99);
        assert!(resolve_required(None::<usize>, &cfg, "count").is_err());
    }

    #[test]
    fn bad_value_reports_the_key() {
        let f = write_file("frames = lots\n");
        let cfg = FileConfig::load(f.path()).expect("load");
        let err = cfg.get::<usize>("frames").unwrap_err().to_string();
        assert!(err.contains("frames"), "error should name the key: {err}");
    }
}
