use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use weits_core::data::series_csv;

use crate::error::CliError;

/// Output directory; every file written through it is created with its parents.
pub struct Out {
    dir: PathBuf,
}

impl Out {
    pub fn new(dir: &Path) -> Self {
        Out { dir: dir.to_path_buf() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn sub(&self, rel: impl AsRef<Path>) -> Out {
        Out {
            dir: self.dir.join(rel),
        }
    }

    pub fn path(&self, name: impl AsRef<Path>) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&self, name: impl AsRef<Path>, text: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| CliError::Write {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        fs::write(&path, text).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    /// `t,value` rows.
    pub fn series(&self, name: impl AsRef<Path>, values: &[f64]) -> Result<PathBuf, CliError> {
        self.write(name, &series_csv("t", "value", None, values))
    }

    /// `h,value` rows with 1-based horizon steps.
    pub fn forecast(&self, name: impl AsRef<Path>, values: &[f64]) -> Result<PathBuf, CliError> {
        let mut s = String::from("h,value\n");
        for (h, v) in values.iter().enumerate() {
            let _ = writeln!(s, "{},{v}", h + 1);
        }
        self.write(name, &s)
    }
}
