//! Config files and output helpers shared by the commands.
//!
//! A config file is a JSON object holding a subset of one command's flags.
//! Unknown keys are rejected. Relative paths inside it resolve against the
//! file's own directory. Flags given on the command line win over the file,
//! and the file wins over built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

/// A parsed config file and the directory its relative paths hang off.
pub struct FileConfig<T> {
    pub values: T,
    base: PathBuf,
}

impl<T: DeserializeOwned + Default> FileConfig<T> {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self { values: T::default(), base: PathBuf::from(".") });
        };
        let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let values = serde_json::from_str(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
        let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        Ok(Self { values, base })
    }
}

impl<T> FileConfig<T> {
    pub fn path(&self, p: &Option<PathBuf>) -> Option<PathBuf> {
        p.as_deref().map(|p| self.resolve(p))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

/// Flag, else file, else nothing.
pub fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

pub fn require<T>(value: Option<T>, name: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::config(format!("missing required setting --{name}")))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Toy {
        a: Option<PathBuf>,
        n: Option<u32>,
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"a": "data/x.json", "n": 3}"#).unwrap();
        let cfg = FileConfig::<Toy>::load(Some(&p)).unwrap();
        assert_eq!(cfg.path(&cfg.values.a).unwrap(), dir.path().join("data/x.json"));
        assert_eq!(pick(&Some(5), &cfg.values.n), Some(5));
        assert_eq!(pick(&None, &cfg.values.n), Some(3));
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"a": "x", "bogus": 1}"#).unwrap();
        let err = FileConfig::<Toy>::load(Some(&p)).err().unwrap();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("bogus"));
    }
}
