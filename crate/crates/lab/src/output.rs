use crate::config::ExperimentConfig;
use crate::context::{Context, Timing};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Output directory that remembers what was written into it.
#[derive(Debug)]
pub struct OutDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> io::Result<()> {
        fs::write(self.dir.join(name), text)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        s.push('\n');
        self.write_text(name, &s)
    }

    /// Let `f` write the file at the given path (binary snapshots).
    pub fn write_with<E: std::fmt::Display>(
        &mut self,
        name: &str,
        f: impl FnOnce(&Path) -> Result<(), E>,
    ) -> io::Result<()> {
        f(&self.dir.join(name)).map_err(|e| io::Error::other(e.to_string()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_manifest(&self, m: &Manifest) -> io::Result<()> {
        let mut s = serde_json::to_string_pretty(m).map_err(io::Error::other)?;
        s.push('\n');
        fs::write(self.dir.join("manifest.json"), s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Provenance of one run. The only output that may differ between runs
/// with the same config and seed (wall times).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub threads: usize,
    pub parallel: bool,
    pub wall_seconds: f64,
    pub stages: Vec<Timing>,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl Manifest {
    pub fn build(
        config: &ExperimentConfig,
        out: &OutDir,
        threads: usize,
        ctx: &Context,
        wall_seconds: f64,
    ) -> io::Result<Self> {
        let canonical = config.canonical_json();
        let files = out
            .files()
            .iter()
            .map(|name| {
                let bytes = fs::read(out.path().join(name))?;
                Ok(FileEntry {
                    name: name.clone(),
                    bytes: bytes.len() as u64,
                    sha256: sha256_hex(&bytes),
                })
            })
            .collect::<io::Result<Vec<_>>>()?;
        Ok(Manifest {
            experiment: config.experiment.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: sha256_hex(canonical.as_bytes()),
            config: serde_json::from_str(&canonical).map_err(io::Error::other)?,
            seed: config.seed,
            threads,
            parallel: cfg!(feature = "parallel"),
            wall_seconds,
            stages: ctx.timings.clone(),
            files,
        })
    }
}
