//! Run configuration, read from a TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Geometry, Lattice, SubsystemMask};
use crate::trajectory::{EvolutionConfig, InitialState};

use super::sha256_hex;

/// Overrides the root of relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "MONFER_OUTPUT_ROOT";

/// Quantities recorded for every sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observable {
    /// Entanglement spectrum per geometry, with `<r~>`, KL1 and entropy.
    Spectrum,
    /// KL2 between the two trajectories of each pair.
    Kl2,
    /// Strip entropies for every width `1..L`.
    EntropyCurve,
    /// Mutual information of two width-1 strips `L / 2` apart.
    MutualInformation,
}

impl Observable {
    pub const ALL: [Observable; 4] = [
        Observable::Spectrum,
        Observable::Kl2,
        Observable::EntropyCurve,
        Observable::MutualInformation,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Observable::Spectrum => "spectrum",
            Observable::Kl2 => "kl2",
            Observable::EntropyCurve => "entropy_curve",
            Observable::MutualInformation => "mutual_info",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        Observable::ALL
            .into_iter()
            .find(|o| o.tag() == tag)
            .ok_or_else(|| Error::Config(format!("unknown observable `{tag}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub dim: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub gammas: Vec<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Defaults to `4 L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    #[serde(default = "default_interval")]
    pub sample_interval: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_initial")]
    pub initial: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub trajectories: usize,
    pub seed: u64,
    /// Zero uses every available core.
    #[serde(default)]
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    #[serde(default = "default_geometries")]
    pub geometries: Vec<String>,
    #[serde(default = "default_observables")]
    pub observables: Vec<String>,
    /// Write spectra as little-endian binary tables instead of CSV.
    #[serde(default)]
    pub binary_spectra: bool,
}

fn default_dt() -> f64 {
    EvolutionConfig::DEFAULT_DT
}
fn default_interval() -> f64 {
    1.0
}
fn default_samples() -> usize {
    1
}
fn default_initial() -> String {
    InitialState::RandomGaussian.tag().into()
}
fn default_geometries() -> Vec<String> {
    vec!["checkerboard".into()]
}
fn default_observables() -> Vec<String> {
    vec!["spectrum".into()]
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSection,
    pub evolution: EvolutionSection,
    pub ensemble: EnsembleSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical serialization. Worker count and output
    /// location do not affect the data and are left out.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.ensemble.workers = 0;
        canonical.output.dir = PathBuf::new();
        sha256_hex(canonical.to_toml().as_bytes())
    }

    pub fn validate(&self) -> Result<()> {
        let lattice = self.lattice()?;
        if self.ensemble.trajectories == 0 {
            return Err(Error::Config("ensemble.trajectories must be >= 1".into()));
        }
        if self.ensemble.seed > i64::MAX as u64 {
            return Err(Error::Config("ensemble.seed must fit in a signed 64-bit integer".into()));
        }
        if self.evolution.gammas.is_empty() {
            return Err(Error::Config("evolution.gammas is empty".into()));
        }
        for (i, g) in self.evolution.gammas.iter().enumerate() {
            if self.evolution.gammas[..i].contains(g) {
                return Err(Error::Config(format!("gamma {g} listed twice")));
            }
            self.evolution(*g, &lattice)?
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.output.geometries.is_empty() {
            return Err(Error::Config("output.geometries is empty".into()));
        }
        for g in self.geometries()? {
            if g == Geometry::Custom {
                return Err(Error::Config("custom masks cannot be configured by tag".into()));
            }
            SubsystemMask::new(&lattice, g).map_err(|e| Error::Config(e.to_string()))?;
        }
        let obs = self.observables()?;
        if obs.contains(&Observable::MutualInformation) && lattice.size() < 4 {
            return Err(Error::Config("mutual information needs L >= 4".into()));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.lattice.dim, self.lattice.size).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn geometries(&self) -> Result<Vec<Geometry>> {
        self.output
            .geometries
            .iter()
            .map(|t| Geometry::parse(t).map_err(|e| Error::Config(e.to_string())))
            .collect()
    }

    pub fn observables(&self) -> Result<Vec<Observable>> {
        let mut v = self
            .output
            .observables
            .iter()
            .map(|t| Observable::parse(t))
            .collect::<Result<Vec<_>>>()?;
        v.sort();
        v.dedup();
        Ok(v)
    }

    pub fn evolution(&self, gamma: f64, lattice: &Lattice) -> Result<EvolutionConfig> {
        let e = &self.evolution;
        let mut cfg = EvolutionConfig::new(gamma, lattice);
        cfg.dt = e.dt;
        if let Some(b) = e.burn_in {
            cfg.burn_in = b;
        }
        cfg.sample_interval = e.sample_interval;
        cfg.samples = e.samples;
        cfg.initial = InitialState::parse(&e.initial).map_err(|err| Error::Config(err.to_string()))?;
        Ok(cfg)
    }

    /// Output directory with the root override applied to relative paths.
    pub fn output_dir(&self) -> PathBuf {
        resolve_output(&self.output.dir)
    }
}

pub(crate) fn resolve_output(dir: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}
