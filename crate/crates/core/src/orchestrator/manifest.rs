//! Run manifest: what was computed, from which configuration, and the
//! checksum of every file written.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::RunConfig;
use super::{sha256_hex, write_atomic};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const MANIFEST_FORMAT: u32 = 1;

/// Trajectories of one monitoring rate. Trajectory `t` draws from stream
/// `first_stream + t` of the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEntry {
    pub gamma: f64,
    pub dir: String,
    pub first_stream: u64,
    pub trajectories: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the run directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: u32,
    /// `trajectory` or `synthetic-gue` / `synthetic-poisson`.
    pub kind: String,
    pub version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub dim: usize,
    pub size: usize,
    pub geometries: Vec<String>,
    pub observables: Vec<String>,
    pub binary_spectra: bool,
    /// Unix seconds.
    pub started: u64,
    pub finished: Option<u64>,
    pub complete: bool,
    pub gammas: Vec<GammaEntry>,
    pub files: Vec<FileEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
}

pub(crate) fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn load(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: RunManifest = toml::from_str(&text).map_err(|e| Error::Format {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        if m.format != MANIFEST_FORMAT {
            return Err(Error::Format {
                path,
                reason: format!("manifest format {} is not supported", m.format),
            });
        }
        Ok(m)
    }

    pub fn save(&self, run_dir: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Format {
            path: run_dir.join(MANIFEST_FILE),
            reason: e.to_string(),
        })?;
        write_atomic(&run_dir.join(MANIFEST_FILE), text.as_bytes())
    }

    /// Checksums `rel` and adds or replaces its inventory entry.
    pub fn register(&mut self, run_dir: &Path, rel: &str) -> Result<()> {
        let path = run_dir.join(rel);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let entry = FileEntry {
            path: rel.to_string(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        };
        match self.files.iter_mut().find(|f| f.path == rel) {
            Some(f) => *f = entry,
            None => self.files.push(entry),
        }
        Ok(())
    }

    pub fn file(&self, rel: &str) -> Option<&FileEntry> {
        self.files.iter().find(|f| f.path == rel)
    }

    pub fn gamma_dir(&self, run_dir: &Path, entry: &GammaEntry) -> PathBuf {
        run_dir.join(&entry.dir)
    }

    /// Files whose current checksum differs from the inventory, or that
    /// are missing.
    pub fn verify(&self, run_dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| match std::fs::read(run_dir.join(&f.path)) {
                Ok(b) => sha256_hex(&b) != f.sha256,
                Err(_) => true,
            })
            .map(|f| f.path.clone())
            .collect()
    }

    pub fn require_complete(&self, run_dir: &Path) -> Result<()> {
        if self.complete {
            Ok(())
        } else {
            Err(Error::Incomplete(format!("run in {} is not complete", run_dir.display())))
        }
    }
}
