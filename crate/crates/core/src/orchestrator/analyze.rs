//! Read-only analysis of a completed run directory into CSV reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::{density_series_from_entropies, Abscissa, ObservableSeries};
use crate::rmt::{
    gue_r_density, log_grid, poisson_r_density, thouless_time, SffCurve, SpectralEnsemble, DEFAULT_ETA,
    THOULESS_TOL,
};
use crate::scaling::{fit_scaling_law, ScalingLaw, ScalingLawFit};
use crate::spectrum::{density_of_states, Binning};
use crate::stats::{Accumulator, Estimate};

use super::data::{parse_field, read_observables, read_spectra, ObservableRow, Table};
use super::manifest::{FileEntry, GammaEntry, RunManifest};
use super::{create_dir, sha256_hex, write_atomic, Provenance};

pub const REPORT_INDEX: &str = "index.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Diagnostic {
    GapRatio,
    Kl1,
    Kl2,
    RHist,
    Sff,
    Thouless,
    Dos,
    EntropyCurve,
    EntropyTime,
    MutualInformation,
}

impl Diagnostic {
    pub const ALL: [Diagnostic; 10] = [
        Diagnostic::GapRatio,
        Diagnostic::Kl1,
        Diagnostic::Kl2,
        Diagnostic::RHist,
        Diagnostic::Sff,
        Diagnostic::Thouless,
        Diagnostic::Dos,
        Diagnostic::EntropyCurve,
        Diagnostic::EntropyTime,
        Diagnostic::MutualInformation,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Diagnostic::GapRatio => "gap_ratio",
            Diagnostic::Kl1 => "kl1",
            Diagnostic::Kl2 => "kl2",
            Diagnostic::RHist => "r_hist",
            Diagnostic::Sff => "sff",
            Diagnostic::Thouless => "thouless",
            Diagnostic::Dos => "dos",
            Diagnostic::EntropyCurve => "entropy_curve",
            Diagnostic::EntropyTime => "entropy_time",
            Diagnostic::MutualInformation => "mutual_info",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        Diagnostic::ALL
            .into_iter()
            .find(|d| d.tag() == tag)
            .ok_or_else(|| Error::Config(format!("unknown diagnostic `{tag}`")))
    }

    /// Comma-separated tags; `all` selects every diagnostic and an empty
    /// string selects none.
    pub fn parse_list(list: &str) -> Result<Vec<Self>> {
        let mut v = Vec::new();
        for t in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if t == "all" {
                v.extend(Diagnostic::ALL);
            } else {
                v.push(Diagnostic::parse(t)?);
            }
        }
        v.sort();
        v.dedup();
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    /// Defaults to `<run>/reports`.
    pub out_dir: Option<PathBuf>,
    pub r_bins: usize,
    pub r_max: f64,
    pub tau: Vec<f64>,
    pub eta: f64,
    pub thouless_tol: f64,
    pub binning: Binning,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            out_dir: None,
            r_bins: 50,
            r_max: 5.0,
            tau: log_grid(0.01, 10.0, 121),
            eta: DEFAULT_ETA,
            thouless_tol: THOULESS_TOL,
            binning: Binning::default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeOutcome {
    pub reports: Vec<PathBuf>,
    /// Human-readable reasons for diagnostics that could not be produced.
    pub skipped: Vec<String>,
}

#[derive(Serialize)]
struct ReportIndex<'a> {
    run_config_hash: &'a str,
    diagnostics: Vec<&'static str>,
    files: Vec<FileEntry>,
}

struct Writer<'a> {
    out_dir: PathBuf,
    base: Provenance,
    outcome: &'a mut AnalyzeOutcome,
}

impl Writer<'_> {
    fn emit(&mut self, name: &str, bytes: Vec<u8>) -> Result<()> {
        let path = self.out_dir.join(name);
        write_atomic(&path, &bytes)?;
        self.outcome.reports.push(path);
        Ok(())
    }

    fn table(&mut self, name: &str, prov: &Provenance, columns: &str, rows: &[String]) -> Result<()> {
        let mut out = Vec::new();
        prov.write(&mut out).expect("write to memory");
        out.extend_from_slice(columns.as_bytes());
        out.push(b'\n');
        for r in rows {
            out.extend_from_slice(r.as_bytes());
            out.push(b'\n');
        }
        self.emit(name, out)
    }

    fn skip(&mut self, why: String) {
        log::warn!("{why}");
        self.outcome.skipped.push(why);
    }
}

fn estimate_row(gamma: f64, e: &Estimate) -> String {
    format!("{gamma},{:.12e},{:.6e},{}", e.value, e.error, e.count)
}

fn estimate_of(values: impl IntoIterator<Item = f64>) -> Option<Estimate> {
    let acc: Accumulator = values.into_iter().filter(|v| v.is_finite()).collect();
    (acc.count() > 0).then(|| acc.estimate())
}

struct GammaData {
    entry: GammaEntry,
    ensemble: Option<SpectralEnsemble>,
    observables: Vec<ObservableRow>,
}

fn load_gamma(run_dir: &Path, m: &RunManifest, entry: &GammaEntry, geometry: &str) -> Result<GammaData> {
    let dir = m.gamma_dir(run_dir, entry);
    let ext = if m.binary_spectra { "bin" } else { "csv" };
    let spath = dir.join(format!("spectra_{geometry}.{ext}"));
    let ensemble = if spath.exists() {
        let (_, rows) = read_spectra(&spath)?;
        let spectra = rows
            .iter()
            .map(|r| {
                let mut s = r.to_spectrum()?;
                s.meta.gamma = entry.gamma;
                s.meta.dim = m.dim;
                s.meta.size = m.size;
                s.meta.geometry = geometry.to_string();
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        Some(SpectralEnsemble::new(spectra)?)
    } else {
        None
    };
    let opath = dir.join("observables.csv");
    let observables = if opath.exists() {
        read_observables(&opath)?
            .into_iter()
            .filter(|r| r.geometry == geometry)
            .collect()
    } else {
        Vec::new()
    };
    Ok(GammaData {
        entry: entry.clone(),
        ensemble,
        observables,
    })
}

fn read_column_rows(path: &Path, filter: Option<(&str, &str)>, value: &str) -> Result<Vec<f64>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let t = Table::read(path)?;
    let cv = t.column(value, path)?;
    let cf = filter.map(|(c, _)| t.column(c, path)).transpose()?;
    t.rows
        .iter()
        .filter(|r| match (cf, filter) {
            (Some(i), Some((_, want))) => r[i] == want,
            _ => true,
        })
        .map(|r| parse_field(&r[cv], path, value))
        .collect()
}

fn per_geometry(
    run_dir: &Path,
    m: &RunManifest,
    geometry: &str,
    diags: &[Diagnostic],
    opts: &AnalyzeOptions,
    w: &mut Writer<'_>,
) -> Result<()> {
    let data = m
        .gammas
        .iter()
        .map(|e| load_gamma(run_dir, m, e, geometry))
        .collect::<Result<Vec<_>>>()?;
    let prov = w.base.clone().with("geometry", geometry);
    let scalar_cols = "gamma,mean,stderr,n";
    let has = |d: Diagnostic| diags.contains(&d);
    let any_spectra = data.iter().any(|d| d.ensemble.as_ref().is_some_and(|e| !e.is_empty()));

    if has(Diagnostic::GapRatio) {
        if any_spectra {
            let mut rows = Vec::new();
            for d in &data {
                if let Some(e) = &d.ensemble {
                    if let Ok(est) = e.mean_gap_ratio() {
                        rows.push(estimate_row(d.entry.gamma, &est));
                    }
                }
            }
            w.table(&format!("gap_ratio_{geometry}.csv"), &prov.clone().with("observable", "gap_ratio"), scalar_cols, &rows)?;
        } else {
            w.skip(format!("gap_ratio/{geometry}: no spectra"));
        }
    }

    if has(Diagnostic::Kl1) {
        let rows: Vec<String> = data
            .iter()
            .filter_map(|d| estimate_of(d.observables.iter().map(|r| r.kl1)).map(|e| estimate_row(d.entry.gamma, &e)))
            .collect();
        if rows.is_empty() {
            w.skip(format!("kl1/{geometry}: no eigenvector data, skipped"));
        } else {
            w.table(&format!("kl1_{geometry}.csv"), &prov.clone().with("observable", "kl1"), scalar_cols, &rows)?;
        }
    }

    if has(Diagnostic::Kl2) {
        let mut rows = Vec::new();
        for d in &data {
            let path = m.gamma_dir(run_dir, &d.entry).join("kl2.csv");
            let vals = read_column_rows(&path, Some(("geometry", geometry)), "kl2")?;
            if let Some(e) = estimate_of(vals) {
                rows.push(estimate_row(d.entry.gamma, &e));
            }
        }
        if rows.is_empty() {
            w.skip(format!("kl2/{geometry}: no eigenvector pairs, skipped"));
        } else {
            w.table(&format!("kl2_{geometry}.csv"), &prov.clone().with("observable", "kl2"), scalar_cols, &rows)?;
        }
    }

    let wants_sff = has(Diagnostic::Sff) || has(Diagnostic::Thouless);
    let mut thouless_rows = Vec::new();
    for d in &data {
        let Some(ens) = d.ensemble.as_ref().filter(|e| !e.is_empty()) else {
            continue;
        };
        let gprov = prov.clone().with("gamma", d.entry.gamma);
        let g = &d.entry.dir;
        if has(Diagnostic::RHist) {
            match ens.r_distribution(opts.r_bins, opts.r_max) {
                Ok(h) => {
                    let p = gprov
                        .clone()
                        .with("chi2_per_dof_poisson", h.chi2_per_dof(poisson_r_density))
                        .with("chi2_per_dof_gue", h.chi2_per_dof(gue_r_density));
                    let mut out = Vec::new();
                    h.write_csv(&mut out, &p.header()).expect("write to memory");
                    w.emit(&format!("r_hist_{geometry}_{g}.csv"), out)?;
                }
                Err(e) => w.skip(format!("r_hist/{geometry}/{g}: {e}")),
            }
        }
        if wants_sff {
            match ens.spectral_form_factor(&opts.tau, opts.eta) {
                Ok(curve) => {
                    if has(Diagnostic::Sff) {
                        let p = gprov.clone().with("eta", opts.eta);
                        let mut out = Vec::new();
                        curve.write_csv(&mut out, &p.header()).expect("write to memory");
                        w.emit(&format!("sff_{geometry}_{g}.csv"), out)?;
                    }
                    thouless_rows.push(thouless_row(d.entry.gamma, &curve, opts.thouless_tol));
                }
                Err(e) => w.skip(format!("sff/{geometry}/{g}: {e}")),
            }
        }
        if has(Diagnostic::Dos) {
            match density_of_states(ens.spectra(), opts.binning) {
                Ok(dos) => {
                    let mut out = Vec::new();
                    dos.write_csv(&mut out, &gprov.header()).expect("write to memory");
                    w.emit(&format!("dos_{geometry}_{g}.csv"), out)?;
                }
                Err(e) => w.skip(format!("dos/{geometry}/{g}: {e}")),
            }
        }
    }
    if (has(Diagnostic::RHist) || wants_sff || has(Diagnostic::Dos)) && !any_spectra {
        w.skip(format!("spectral diagnostics/{geometry}: no spectra"));
    }
    if has(Diagnostic::Thouless) && !thouless_rows.is_empty() {
        let rows: Vec<String> = thouless_rows.into_iter().flatten().collect();
        let p = prov.clone().with("tolerance", opts.thouless_tol).with("eta", opts.eta);
        w.table(&format!("thouless_{geometry}.csv"), &p, "gamma,tau_th,flagged,t_heisenberg", &rows)?;
    }

    if has(Diagnostic::EntropyTime) {
        let mut any = false;
        for d in &data {
            if d.observables.is_empty() {
                continue;
            }
            any = true;
            let mut by_sample: BTreeMap<usize, (f64, Accumulator)> = BTreeMap::new();
            for r in &d.observables {
                let e = by_sample.entry(r.sample).or_insert((r.time, Accumulator::new()));
                e.1.push(r.entropy / m.size as f64);
            }
            let mut series = ObservableSeries::new(Abscissa::Time);
            for (t, acc) in by_sample.values() {
                series.push(*t, acc);
            }
            let mut out = Vec::new();
            let p = prov.clone().with("gamma", d.entry.gamma).with("observable", "S_A / L");
            series.write_csv(&mut out, &p.header()).expect("write to memory");
            w.emit(&format!("entropy_time_{geometry}_{}.csv", d.entry.dir), out)?;
        }
        if !any {
            w.skip(format!("entropy_time/{geometry}: no observables"));
        }
    }
    Ok(())
}

fn thouless_row(gamma: f64, curve: &SffCurve, tol: f64) -> Option<String> {
    thouless_time(curve, tol)
        .ok()
        .map(|t| format!("{gamma},{:.8e},{},{:.8e}", t.tau, t.flagged as u8, curve.t_heisenberg))
}

/// Strip entropies of one rate grouped by width.
pub(crate) fn strip_accumulators(path: &Path) -> Result<BTreeMap<usize, Accumulator>> {
    let t = Table::read(path)?;
    let (cw, ce) = (t.column("width", path)?, t.column("entropy", path)?);
    let mut accs: BTreeMap<usize, Accumulator> = BTreeMap::new();
    for r in &t.rows {
        let width: usize = parse_field(&r[cw], path, "width")?;
        accs.entry(width).or_default().push(parse_field(&r[ce], path, "entropy")?);
    }
    Ok(accs)
}

fn entropy_curves(run_dir: &Path, m: &RunManifest, w: &mut Writer<'_>) -> Result<()> {
    let mut any = false;
    for entry in &m.gammas {
        let path = m.gamma_dir(run_dir, entry).join("entropy_curve.csv");
        if !path.exists() {
            continue;
        }
        any = true;
        let accs = strip_accumulators(&path)?;
        let widths: Vec<usize> = accs.keys().copied().collect();
        let values: Vec<Accumulator> = accs.values().copied().collect();
        let p = w.base.clone().with("gamma", entry.gamma).with("observable", "S_A / L");
        let raw = density_series_from_entropies(m.size, &widths, &values, false)?;
        let mut out = Vec::new();
        raw.write_csv(&mut out, &p.header()).expect("write to memory");
        w.emit(&format!("entropy_curve_{}.csv", entry.dir), out)?;
        if let Ok(shifted) = density_series_from_entropies(m.size, &widths, &values, true) {
            let mut out = Vec::new();
            shifted
                .write_csv(&mut out, &p.clone().with("offset", "value at l_A = L/2 subtracted").header())
                .expect("write to memory");
            w.emit(&format!("entropy_curve_offset_{}.csv", entry.dir), out)?;
        }
        let mut rows = Vec::new();
        for law in ScalingLaw::ALL {
            match fit_scaling_law(&raw, m.size, law) {
                Ok(fit) => rows.push(fit.csv_row()),
                Err(e) => log::warn!("{} fit at gamma {}: {e}", law.tag(), entry.gamma),
            }
        }
        w.table(&format!("law_fits_{}.csv", entry.dir), &p, ScalingLawFit::CSV_HEADER, &rows)?;
    }
    if !any {
        w.skip("entropy_curve: run has no strip entropies".into());
    }
    Ok(())
}

fn mutual_info(run_dir: &Path, m: &RunManifest, w: &mut Writer<'_>) -> Result<()> {
    let mut rows = Vec::new();
    for entry in &m.gammas {
        let path = m.gamma_dir(run_dir, entry).join("mutual_info.csv");
        if let Some(e) = estimate_of(read_column_rows(&path, None, "mi")?) {
            rows.push(estimate_row(entry.gamma, &e));
        }
    }
    if rows.is_empty() {
        w.skip("mutual_info: run has no mutual information samples".into());
        return Ok(());
    }
    let p = w.base.clone().with("observable", "mutual_info");
    w.table("mutual_info.csv", &p, "gamma,mean,stderr,n", &rows)
}

/// Writes one report per requested diagnostic. Diagnostics whose inputs
/// were not recorded are listed in [`AnalyzeOutcome::skipped`].
pub fn analyze(run_dir: &Path, diagnostics: &[Diagnostic], opts: &AnalyzeOptions) -> Result<AnalyzeOutcome> {
    let mut outcome = AnalyzeOutcome::default();
    if diagnostics.is_empty() {
        return Ok(outcome);
    }
    let m = RunManifest::load(run_dir)?;
    m.require_complete(run_dir)?;
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| run_dir.join("reports"));
    create_dir(&out_dir)?;
    let base = Provenance::new(&m.config_hash, m.master_seed)
        .with("source", &m.kind)
        .with("dim", m.dim)
        .with("size", m.size);
    let mut w = Writer {
        out_dir: out_dir.clone(),
        base,
        outcome: &mut outcome,
    };
    for g in &m.geometries {
        per_geometry(run_dir, &m, g, diagnostics, opts, &mut w)?;
    }
    if diagnostics.contains(&Diagnostic::EntropyCurve) {
        entropy_curves(run_dir, &m, &mut w)?;
    }
    if diagnostics.contains(&Diagnostic::MutualInformation) {
        mutual_info(run_dir, &m, &mut w)?;
    }

    let mut files = Vec::new();
    for p in &outcome.reports {
        let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
        files.push(FileEntry {
            path: p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
    }
    let index = ReportIndex {
        run_config_hash: &m.config_hash,
        diagnostics: diagnostics.iter().map(|d| d.tag()).collect(),
        files,
    };
    let text = toml::to_string(&index).map_err(|e| Error::Format {
        path: out_dir.join(REPORT_INDEX),
        reason: e.to_string(),
    })?;
    write_atomic(&out_dir.join(REPORT_INDEX), text.as_bytes())?;
    Ok(outcome)
}
