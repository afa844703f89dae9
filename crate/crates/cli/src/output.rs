//! Output directories written atomically, and run manifests.

use pseudomode_core::{Error, Result};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::{BufWriter, ErrorKind};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files are written to a hidden sibling directory and moved into place by
/// `commit`, so an interrupted run never leaves a half-written directory.
pub struct OutputDir {
    target: PathBuf,
    staging: PathBuf,
    overwrite: bool,
    files: Vec<String>,
}

fn non_empty_dir(p: &Path) -> bool {
    fs::read_dir(p).map(|mut d| d.next().is_some()).unwrap_or(false)
}

impl OutputDir {
    pub fn create(target: &Path, overwrite: bool) -> Result<Self> {
        if target.exists() && !target.is_dir() {
            return Err(Error::Io(std::io::Error::new(ErrorKind::AlreadyExists, format!("{} exists and is not a directory", target.display()))));
        }
        if non_empty_dir(target) && !overwrite {
            return Err(Error::Io(std::io::Error::new(
                ErrorKind::AlreadyExists,
                format!("output directory {} is not empty (pass --overwrite to replace it)", target.display()),
            )));
        }
        let parent = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent)?;
        let name = target.file_name().and_then(|n| n.to_str()).unwrap_or("out");
        let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir(&staging)?;
        Ok(OutputDir { target: target.to_path_buf(), staging, overwrite, files: Vec::new() })
    }

    pub fn writer(&mut self, name: &str) -> Result<BufWriter<fs::File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(fs::File::create(self.staging.join(name))?))
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        self.files.push(name.to_string());
        fs::write(self.staging.join(name), text)?;
        Ok(())
    }

    /// Hashes of the files written so far.
    pub fn file_hashes(&self) -> Result<Vec<(String, String)>> {
        self.files.iter().map(|f| Ok((f.clone(), sha256_hex(&fs::read(self.staging.join(f))?)))).collect()
    }

    pub fn commit(self) -> Result<PathBuf> {
        if self.target.exists() {
            if !self.overwrite && non_empty_dir(&self.target) {
                return Err(Error::Io(std::io::Error::new(ErrorKind::AlreadyExists, format!("{} appeared during the run", self.target.display()))));
            }
            fs::remove_dir_all(&self.target)?;
        }
        fs::rename(&self.staging, &self.target)?;
        Ok(self.target.clone())
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.staging);
    }
}

/// Wall time per named stage.
#[derive(Default)]
pub struct Stages(Vec<(String, f64)>);

impl Stages {
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.0.push((name.to_string(), start.elapsed().as_secs_f64()));
        Ok(out)
    }

    pub fn table(&self) -> toml::Table {
        self.0.iter().map(|(k, v)| (k.clone(), toml::Value::Float(*v))).collect()
    }
}
