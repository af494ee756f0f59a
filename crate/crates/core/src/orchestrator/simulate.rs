//! Parallel ensemble execution.
//!
//! The unit of work is a pair of trajectories `(2k, 2k + 1)` at one
//! monitoring rate, so that KL2 can be formed without keeping eigenvectors
//! around. Each finished unit is written atomically to
//! `records/<gamma dir>/pair_<k>.rec`; a rerun skips units whose record
//! exists. Once every unit is done the records are merged, in unit order,
//! into the data tables of each rate.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{Geometry, Lattice, SubsystemMask};
use crate::observables::{entanglement_entropy, mutual_information, CorrelationMatrix};
use crate::rmt::{gap_ratios, kl1, kl2};
use crate::spectrum::entanglement_hamiltonian;
use crate::trajectory::{run_trajectory, EvolutionConfig, Propagator, TrajectoryState};

use super::config::{Observable, RunConfig};
use super::data::{write_binary_spectra, write_spectra_csv, ObservableRow, SpectrumRow, OBSERVABLE_COLUMNS};
use super::manifest::{unix_now, GammaEntry, RunManifest, MANIFEST_FORMAT};
use super::{create_dir, gamma_dir_name, write_atomic, Provenance, VERSION};

pub const RECORDS_DIR: &str = "records";

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub run_dir: PathBuf,
    pub manifest: RunManifest,
    /// Units computed in this invocation.
    pub computed: usize,
    /// Units found already complete on disk.
    pub reused: usize,
}

struct Context {
    lattice: Lattice,
    geometries: Vec<Geometry>,
    masks: Vec<SubsystemMask>,
    observables: Vec<Observable>,
    evolution: Vec<EvolutionConfig>,
    propagator: Propagator,
    seed: u64,
    hash: String,
    strips: Vec<SubsystemMask>,
    mi_pair: Option<(SubsystemMask, SubsystemMask)>,
}

impl Context {
    fn wants(&self, o: Observable) -> bool {
        self.observables.contains(&o)
    }

    fn needs_spectra(&self) -> bool {
        self.wants(Observable::Spectrum) || self.wants(Observable::Kl2)
    }
}

struct SampleOut {
    spectra: Vec<SpectrumRow>,
    /// Mode densities per geometry, kept only for KL2.
    densities: Vec<Vec<Vec<f64>>>,
    observables: Vec<ObservableRow>,
    strips: Vec<f64>,
    mi: f64,
}

fn observe(ctx: &Context, state: &TrajectoryState, traj: u64, sample: usize) -> Result<SampleOut> {
    let l = ctx.lattice.size();
    let mut out = SampleOut {
        spectra: Vec::new(),
        densities: Vec::new(),
        observables: Vec::new(),
        strips: Vec::new(),
        mi: f64::NAN,
    };
    if ctx.needs_spectra() {
        for (geom, mask) in ctx.geometries.iter().zip(&ctx.masks) {
            let g = CorrelationMatrix::new(state, mask)?;
            let spec = entanglement_hamiltonian(&g, true)?;
            let dens = spec.densities().expect("vectors requested");
            let usable = spec.usable_energies();
            let mean_r = gap_ratios(&usable)
                .ok()
                .and_then(|r| r.mean_tilde())
                .unwrap_or(f64::NAN);
            let k1 = if dens.len() >= 2 { kl1(&dens, l)? } else { f64::NAN };
            out.observables.push(ObservableRow {
                geometry: geom.tag(),
                trajectory: traj,
                sample,
                time: state.time(),
                mean_r,
                kl1: k1,
                entropy: spec.entropy(),
                n_levels: spec.len(),
                n_saturated: spec.saturated_count(),
            });
            out.spectra.push(SpectrumRow::from_spectrum(traj, sample, state.time(), &spec));
            if ctx.wants(Observable::Kl2) {
                out.densities.push(dens);
            }
        }
    }
    if ctx.wants(Observable::EntropyCurve) {
        out.strips = ctx
            .strips
            .iter()
            .map(|m| entanglement_entropy(state, m))
            .collect::<Result<_>>()?;
    }
    if let Some((a, b)) = &ctx.mi_pair {
        out.mi = mutual_information(&ctx.lattice, state, a, b)?;
    }
    Ok(out)
}

fn join_f64(v: &[f64]) -> String {
    let mut s = String::with_capacity(v.len() * 24);
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{x:e}").expect("write to string");
    }
    s
}

/// Runs both trajectories of a unit and renders its record.
fn run_unit(ctx: &Context, entry: &GammaEntry, gi: usize, pair: usize) -> Result<String> {
    let evo = &ctx.evolution[gi];
    let total = entry.trajectories;
    let members: Vec<usize> = (2 * pair..(2 * pair + 2).min(total)).collect();
    let mut runs = Vec::with_capacity(2);
    for &t in &members {
        let traj = t as u64;
        let stream = entry.first_stream + traj;
        let samples = run_trajectory(&ctx.lattice, evo, &ctx.propagator, ctx.seed, stream, |state| {
            let index = (state.steps().saturating_sub(evo.burn_in_steps()) / evo.interval_steps()) as usize;
            observe(ctx, state, traj, index)
        })?;
        runs.push(samples);
    }

    let mut rec = String::new();
    writeln!(rec, "#record {} {} {}", ctx.hash, gi, pair).expect("write to string");
    for (samples, &t) in runs.iter().zip(&members) {
        for s in samples {
            let v = &s.value;
            for row in &v.observables {
                writeln!(rec, "O|{}", row.csv()).expect("write to string");
            }
            for (g, row) in v.spectra.iter().enumerate() {
                let flags: String = row.saturated.iter().map(|&b| if b { '1' } else { '0' }).collect();
                writeln!(
                    rec,
                    "S|{g}|{}|{}|{}|{}|{flags}",
                    row.trajectory,
                    row.sample,
                    row.time,
                    join_f64(&row.energies)
                )
                .expect("write to string");
            }
            for (w, e) in v.strips.iter().enumerate() {
                writeln!(rec, "E|{t},{},{},{},{e:e}", s.index, s.time, w + 1).expect("write to string");
            }
            if !v.mi.is_nan() {
                writeln!(rec, "M|{t},{},{},{:e}", s.index, s.time, v.mi).expect("write to string");
            }
        }
    }
    if ctx.wants(Observable::Kl2) && runs.len() == 2 {
        for (a, b) in runs[0].iter().zip(&runs[1]) {
            for (g, geom) in ctx.geometries.iter().enumerate() {
                let (da, db) = (&a.value.densities[g], &b.value.densities[g]);
                let k = if da.len() >= 2 {
                    kl2(da, db, ctx.lattice.size())?
                } else {
                    f64::NAN
                };
                writeln!(rec, "K|{},{pair},{},{:e}", geom.tag(), a.index, k).expect("write to string");
            }
        }
    }
    Ok(rec)
}

fn record_path(run_dir: &Path, entry: &GammaEntry, pair: usize) -> PathBuf {
    run_dir.join(RECORDS_DIR).join(&entry.dir).join(format!("pair_{pair:06}.rec"))
}

fn record_is_current(path: &Path, hash: &str, gi: usize, pair: usize) -> bool {
    match std::fs::read_to_string(path) {
        Ok(text) => text
            .lines()
            .next()
            .is_some_and(|l| l == format!("#record {hash} {gi} {pair}")),
        Err(_) => false,
    }
}

#[derive(Default)]
struct Merged {
    observables: Vec<String>,
    spectra: Vec<Vec<SpectrumRow>>,
    kl2: Vec<String>,
    curve: Vec<String>,
    mi: Vec<String>,
}

fn malformed(path: &Path, line: usize, what: &str) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: format!("line {line}: {what}"),
    }
}

fn merge_record(path: &Path, merged: &mut Merged, n_geom: usize) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    for (i, line) in text.lines().enumerate().skip(1) {
        let (tag, body) = line.split_once('|').ok_or_else(|| malformed(path, i, "no tag"))?;
        match tag {
            "O" => merged.observables.push(body.to_string()),
            "K" => merged.kl2.push(body.to_string()),
            "E" => merged.curve.push(body.to_string()),
            "M" => merged.mi.push(body.to_string()),
            "S" => {
                let f: Vec<&str> = body.split('|').collect();
                if f.len() != 6 {
                    return Err(malformed(path, i, "spectrum line needs 6 fields"));
                }
                let num = |s: &str| s.parse::<f64>().map_err(|_| malformed(path, i, "bad number"));
                let g: usize = f[0].parse().map_err(|_| malformed(path, i, "bad geometry index"))?;
                if g >= n_geom {
                    return Err(malformed(path, i, "geometry index out of range"));
                }
                let energies = if f[4].is_empty() {
                    Vec::new()
                } else {
                    f[4].split(' ').map(num).collect::<Result<Vec<_>>>()?
                };
                let saturated: Vec<bool> = f[5].chars().map(|c| c == '1').collect();
                if saturated.len() != energies.len() {
                    return Err(malformed(path, i, "flag count differs from level count"));
                }
                merged.spectra[g].push(SpectrumRow {
                    trajectory: f[1].parse().map_err(|_| malformed(path, i, "bad trajectory"))?,
                    sample: f[2].parse().map_err(|_| malformed(path, i, "bad sample"))?,
                    time: num(f[3])?,
                    energies,
                    saturated,
                });
            }
            _ => return Err(malformed(path, i, "unknown tag")),
        }
    }
    Ok(())
}

fn write_table(
    run_dir: &Path,
    rel: &str,
    prov: &Provenance,
    columns: &str,
    rows: &[String],
    manifest: &mut RunManifest,
) -> Result<()> {
    if rows.is_empty() {
        return Ok(());
    }
    let mut out = Vec::new();
    prov.write(&mut out).map_err(|e| Error::io(run_dir.join(rel), e))?;
    out.extend_from_slice(columns.as_bytes());
    out.push(b'\n');
    for r in rows {
        out.extend_from_slice(r.as_bytes());
        out.push(b'\n');
    }
    write_atomic(&run_dir.join(rel), &out)?;
    manifest.register(run_dir, rel)
}

fn aggregate(ctx: &Context, cfg: &RunConfig, run_dir: &Path, manifest: &mut RunManifest) -> Result<()> {
    let entries = manifest.gammas.clone();
    for entry in &entries {
        let pairs = entry.trajectories.div_ceil(2);
        let mut merged = Merged {
            spectra: vec![Vec::new(); ctx.geometries.len()],
            ..Default::default()
        };
        for pair in 0..pairs {
            merge_record(&record_path(run_dir, entry, pair), &mut merged, ctx.geometries.len())?;
        }
        let base = Provenance::new(&manifest.config_hash, manifest.master_seed)
            .with("dim", ctx.lattice.dim())
            .with("size", ctx.lattice.size())
            .with("gamma", entry.gamma);
        let dir = &entry.dir;
        write_table(
            run_dir,
            &format!("{dir}/observables.csv"),
            &base,
            OBSERVABLE_COLUMNS,
            &merged.observables,
            manifest,
        )?;
        if ctx.wants(Observable::Spectrum) {
            for (geom, rows) in ctx.geometries.iter().zip(&merged.spectra) {
                if rows.is_empty() {
                    continue;
                }
                let prov = base.clone().with("geometry", geom.tag());
                let (rel, bytes) = if cfg.output.binary_spectra {
                    (format!("{dir}/spectra_{}.bin", geom.tag()), write_binary_spectra(rows, &prov))
                } else {
                    (format!("{dir}/spectra_{}.csv", geom.tag()), write_spectra_csv(rows, &prov))
                };
                write_atomic(&run_dir.join(&rel), &bytes)?;
                manifest.register(run_dir, &rel)?;
            }
        }
        write_table(
            run_dir,
            &format!("{dir}/kl2.csv"),
            &base,
            "geometry,pair,sample,kl2",
            &merged.kl2,
            manifest,
        )?;
        write_table(
            run_dir,
            &format!("{dir}/entropy_curve.csv"),
            &base,
            "trajectory,sample,time,width,entropy",
            &merged.curve,
            manifest,
        )?;
        write_table(
            run_dir,
            &format!("{dir}/mutual_info.csv"),
            &base.clone().with("strips", "width 1 at offsets 0 and L/2"),
            "trajectory,sample,time,mi",
            &merged.mi,
            manifest,
        )?;
    }
    Ok(())
}

fn context(cfg: &RunConfig, hash: &str) -> Result<Context> {
    let lattice = cfg.lattice()?;
    let geometries = cfg.geometries()?;
    let masks = geometries
        .iter()
        .map(|g| SubsystemMask::new(&lattice, g.clone()))
        .collect::<Result<Vec<_>>>()?;
    let observables = cfg.observables()?;
    let evolution = cfg
        .evolution
        .gammas
        .iter()
        .map(|&g| cfg.evolution(g, &lattice))
        .collect::<Result<Vec<_>>>()?;
    let propagator = Propagator::new(&lattice, cfg.evolution.dt)?;
    let l = lattice.size();
    let strips = if observables.contains(&Observable::EntropyCurve) {
        (1..l)
            .map(|w| SubsystemMask::new(&lattice, Geometry::strip(w)))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let mi_pair = if observables.contains(&Observable::MutualInformation) {
        Some((
            SubsystemMask::new(&lattice, Geometry::Strip { width: 1, offset: 0 })?,
            SubsystemMask::new(&lattice, Geometry::Strip { width: 1, offset: l / 2 })?,
        ))
    } else {
        None
    };
    Ok(Context {
        lattice,
        geometries,
        masks,
        observables,
        evolution,
        propagator,
        seed: cfg.ensemble.seed,
        hash: hash.to_string(),
        strips,
        mi_pair,
    })
}

/// Runs every trajectory of `cfg`, persists the data tables and the
/// manifest, and returns the manifest. Rerunning an interrupted
/// configuration reuses its completed units.
pub fn simulate(cfg: &RunConfig) -> Result<SimulateReport> {
    cfg.validate()?;
    let run_dir = cfg.output_dir();
    create_dir(&run_dir)?;
    let hash = cfg.hash();
    if let Ok(old) = RunManifest::load(&run_dir) {
        if old.config_hash != hash {
            return Err(Error::Config(format!(
                "{} holds a run of a different configuration",
                run_dir.display()
            )));
        }
    }
    let ctx = context(cfg, &hash)?;
    let gammas: Vec<GammaEntry> = cfg
        .evolution
        .gammas
        .iter()
        .enumerate()
        .map(|(gi, &g)| GammaEntry {
            gamma: g,
            dir: gamma_dir_name(g),
            first_stream: (gi as u64) << 32,
            trajectories: cfg.ensemble.trajectories,
        })
        .collect();
    let mut manifest = RunManifest {
        format: MANIFEST_FORMAT,
        kind: "trajectory".into(),
        version: VERSION.into(),
        config_hash: hash.clone(),
        master_seed: cfg.ensemble.seed,
        dim: ctx.lattice.dim(),
        size: ctx.lattice.size(),
        geometries: ctx.geometries.iter().map(|g| g.tag()).collect(),
        observables: ctx.observables.iter().map(|o| o.tag().to_string()).collect(),
        binary_spectra: cfg.output.binary_spectra,
        started: unix_now(),
        finished: None,
        complete: false,
        gammas,
        files: Vec::new(),
        config: Some(cfg.clone()),
    };
    manifest.save(&run_dir)?;

    let units: Vec<(usize, usize)> = manifest
        .gammas
        .iter()
        .enumerate()
        .flat_map(|(gi, e)| (0..e.trajectories.div_ceil(2)).map(move |p| (gi, p)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.ensemble.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let entries = &manifest.gammas;
    let outcome: Vec<Result<bool>> = pool.install(|| {
        units
            .par_iter()
            .map(|&(gi, pair)| {
                let entry = &entries[gi];
                let path = record_path(&run_dir, entry, pair);
                if record_is_current(&path, &hash, gi, pair) {
                    return Ok(false);
                }
                let rec = run_unit(&ctx, entry, gi, pair)?;
                write_atomic(&path, rec.as_bytes())?;
                log::debug!("gamma {} pair {pair} done", entry.gamma);
                Ok(true)
            })
            .collect()
    });
    let mut computed = 0;
    let mut reused = 0;
    let mut first_err = None;
    for r in outcome {
        match r {
            Ok(true) => computed += 1,
            Ok(false) => reused += 1,
            Err(e) if first_err.is_none() => first_err = Some(e),
            Err(e) => log::error!("{e}"),
        }
    }
    let result = match first_err {
        Some(e) => Err(e),
        None => aggregate(&ctx, cfg, &run_dir, &mut manifest),
    };
    manifest.finished = Some(unix_now());
    match result {
        Ok(()) => {
            manifest.complete = true;
            manifest.save(&run_dir)?;
            log::info!("{computed} units computed, {reused} reused");
            Ok(SimulateReport {
                run_dir,
                manifest,
                computed,
                reused,
            })
        }
        Err(e) => {
            if let Err(save) = manifest.save(&run_dir) {
                log::error!("could not record partial manifest: {save}");
            }
            Err(e)
        }
    }
}
