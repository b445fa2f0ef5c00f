use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{FitsError, Result};

/// Output directory filled under a hidden staging name and renamed into
/// place by [`RunDir::finish`]. Existing run directories are never reused.
#[derive(Debug)]
pub struct RunDir {
    staging: PathBuf,
    target: PathBuf,
}

impl RunDir {
    pub fn create(parent: &Path, command: &str) -> Result<Self> {
        fs::create_dir_all(parent).map_err(|e| FitsError::io(parent, e))?;
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
        let base = format!("{command}-{stamp}");
        let mut suffix = 0usize;
        loop {
            let name = if suffix == 0 { base.clone() } else { format!("{base}-{suffix}") };
            let target = parent.join(&name);
            let staging = parent.join(format!(".{name}.partial"));
            if !target.exists() && !staging.exists() {
                fs::create_dir(&staging).map_err(|e| FitsError::io(&staging, e))?;
                return Ok(Self { staging, target });
            }
            suffix += 1;
        }
    }

    /// Where files are written until the run completes.
    pub fn path(&self) -> &Path {
        &self.staging
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.staging.join(name)
    }

    pub fn finish(self) -> Result<PathBuf> {
        if self.target.exists() {
            return Err(FitsError::Config(format!("run directory {} already exists", self.target.display())));
        }
        fs::rename(&self.staging, &self.target).map_err(|e| FitsError::io(&self.target, e))?;
        Ok(self.target)
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| FitsError::InvalidValue(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| FitsError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn never_reuses_a_directory() {
        let tmp = tempfile::tempdir().unwrap();
        let a = RunDir::create(tmp.path(), "train").unwrap();
        let b = RunDir::create(tmp.path(), "train").unwrap();
        assert_ne!(a.path(), b.path());
        fs::write(a.file("x"), "1").unwrap();
        let fa = a.finish().unwrap();
        let fb = b.finish().unwrap();
        assert_ne!(fa, fb);
        assert!(fa.join("x").is_file());
        assert!(!fa.file_name().unwrap().to_string_lossy().starts_with('.'));
    }
}
