//! Random-matrix calibration ensembles written in the run-directory
//! layout, so `analyze` treats them like simulated data.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::rmt::{synthetic_ensemble, SyntheticKind};

use super::data::{write_binary_spectra, write_spectra_csv, SpectrumRow};
use super::manifest::{unix_now, GammaEntry, RunManifest, MANIFEST_FORMAT};
use super::{create_dir, gamma_dir_name, sha256_hex, write_atomic, Provenance, VERSION};

/// Geometry tag used for synthetic spectra.
pub const SYNTHETIC_GEOMETRY: &str = "synthetic";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOptions {
    pub kind: SyntheticKind,
    pub levels: usize,
    pub samples: usize,
    pub seed: u64,
    pub dir: PathBuf,
    pub binary: bool,
}

pub fn synthetic(opts: &SyntheticOptions) -> Result<RunManifest> {
    if opts.samples == 0 || opts.levels < 3 {
        return Err(Error::Config("synthetic ensembles need samples >= 1 and levels >= 3".into()));
    }
    if opts.seed > i64::MAX as u64 {
        return Err(Error::Config("seed must fit in a signed 64-bit integer".into()));
    }
    let dir: &Path = &opts.dir;
    create_dir(dir)?;
    let kind = format!("synthetic-{}", opts.kind.tag());
    let hash = sha256_hex(format!("{kind} {} {} {}", opts.levels, opts.samples, opts.seed).as_bytes());
    let entry = GammaEntry {
        gamma: 0.0,
        dir: gamma_dir_name(0.0),
        first_stream: 0,
        trajectories: opts.samples,
    };
    let mut manifest = RunManifest {
        format: MANIFEST_FORMAT,
        kind: kind.clone(),
        version: VERSION.into(),
        config_hash: hash.clone(),
        master_seed: opts.seed,
        dim: 0,
        size: opts.levels,
        geometries: vec![SYNTHETIC_GEOMETRY.into()],
        observables: vec!["spectrum".into()],
        binary_spectra: opts.binary,
        started: unix_now(),
        finished: None,
        complete: false,
        gammas: vec![entry.clone()],
        files: Vec::new(),
        config: None,
    };
    let spectra = synthetic_ensemble(opts.kind, opts.levels, opts.samples, opts.seed)?;
    let rows: Vec<SpectrumRow> = spectra
        .into_iter()
        .enumerate()
        .map(|(i, mut e)| {
            e.sort_by(f64::total_cmp);
            SpectrumRow {
                trajectory: i as u64,
                sample: 0,
                time: 0.0,
                saturated: vec![false; e.len()],
                energies: e,
            }
        })
        .collect();
    let prov = Provenance::new(&hash, opts.seed)
        .with("source", &kind)
        .with("levels", opts.levels)
        .with("geometry", SYNTHETIC_GEOMETRY);
    let (rel, bytes) = if opts.binary {
        (format!("{}/spectra_{SYNTHETIC_GEOMETRY}.bin", entry.dir), write_binary_spectra(&rows, &prov))
    } else {
        (format!("{}/spectra_{SYNTHETIC_GEOMETRY}.csv", entry.dir), write_spectra_csv(&rows, &prov))
    };
    write_atomic(&dir.join(&rel), &bytes)?;
    manifest.register(dir, &rel)?;
    manifest.complete = true;
    manifest.finished = Some(unix_now());
    manifest.save(dir)?;
    Ok(manifest)
}
