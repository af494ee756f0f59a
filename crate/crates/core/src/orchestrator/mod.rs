//! Configuration, parallel ensemble runs, persistence and the analysis
//! pipelines behind the `monfer` command line.

mod analyze;
mod collapse;
mod config;
mod data;
mod figure;
mod manifest;
mod simulate;
mod synthetic;

pub use analyze::{analyze, AnalyzeOptions, AnalyzeOutcome, Diagnostic};
pub use collapse::{collapse_reports, read_report, CollapseOutcome, ReportRow};
pub use config::{
    EnsembleSection, EvolutionSection, LatticeSection, Observable, OutputSection, RunConfig, OUTPUT_ROOT_ENV,
};
pub use data::{
    read_binary_spectra, read_spectra, write_binary_spectra, ObservableRow, SpectrumRow, BINARY_MAGIC,
};
pub use figure::{curve_crossing, figure, FigureOptions, FigureOutcome};
pub use manifest::{FileEntry, GammaEntry, RunManifest, MANIFEST_FILE, MANIFEST_FORMAT};
pub use simulate::{simulate, SimulateReport};
pub use synthetic::{synthetic, SyntheticOptions};

use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit codes of the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ExitStatus {
    Success = 0,
    ConfigError = 1,
    RuntimeFailure = 2,
    IncompleteData = 3,
}

impl ExitStatus {
    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::Config(_) => ExitStatus::ConfigError,
            Error::Incomplete(_) => ExitStatus::IncompleteData,
            _ => ExitStatus::RuntimeFailure,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `key = value` lines written at the top of every output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub extra: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(config_hash: &str, seed: u64) -> Self {
        Provenance {
            config_hash: config_hash.to_string(),
            seed,
            version: VERSION.to_string(),
            extra: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }

    pub fn header(&self) -> Vec<(String, String)> {
        let mut h = vec![
            ("config_hash".to_string(), self.config_hash.clone()),
            ("seed".to_string(), self.seed.to_string()),
            ("version".to_string(), self.version.clone()),
        ];
        h.extend(self.extra.iter().cloned());
        h
    }

    pub fn write<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for (k, v) in self.header() {
            writeln!(out, "# {k} = {v}")?;
        }
        Ok(())
    }
}

/// Writes to a sibling temporary file and renames it into place, so readers
/// never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Directory name used for one monitoring rate.
pub fn gamma_dir_name(gamma: f64) -> String {
    format!("gamma_{gamma}")
}

/// Reads the `# key = value` header lines of a CSV file.
pub fn read_header(text: &str) -> Vec<(String, String)> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l[1..].split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

pub(crate) fn header_value<'a>(header: &'a [(String, String)], key: &str) -> Option<&'a str> {
    header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}
