//! Canned simulate-and-analyze recipes, one per figure, at a
//! scale set on the command line.

use std::path::{Path, PathBuf};

use crate::collapse::{Ansatz, CollapseOptions};
use crate::error::{Error, Result};
use crate::scaling::prefactor_extraction;
use crate::stats::Accumulator;

use super::analyze::{analyze, AnalyzeOptions, Diagnostic};
use super::collapse::{collapse_reports, read_report, ReportRow};
use super::config::{EnsembleSection, EvolutionSection, LatticeSection, OutputSection, RunConfig};
use super::data::read_observables;
use super::manifest::RunManifest;
use super::simulate::simulate;
use super::{write_atomic, Provenance};

#[derive(Debug, Clone, PartialEq)]
pub struct FigureOptions {
    pub out: PathBuf,
    /// Overrides the recipe's system sizes.
    pub sizes: Option<Vec<usize>>,
    /// Overrides the recipe's monitoring rates.
    pub gammas: Option<Vec<f64>>,
    pub trajectories: usize,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for FigureOptions {
    fn default() -> Self {
        FigureOptions {
            out: PathBuf::from("figures"),
            sizes: None,
            gammas: None,
            trajectories: 16,
            samples: 2,
            seed: 1,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FigureOutcome {
    pub runs: Vec<PathBuf>,
    pub reports: Vec<PathBuf>,
    pub skipped: Vec<String>,
}

impl FigureOutcome {
    fn absorb(&mut self, run: PathBuf, reports: Vec<PathBuf>, skipped: Vec<String>) {
        self.runs.push(run);
        self.reports.extend(reports);
        self.skipped.extend(skipped);
    }
}

/// First `gamma` at which two curves on a common grid cross, by linear
/// interpolation of their difference.
pub fn curve_crossing(a: &[(f64, f64)], b: &[(f64, f64)]) -> Option<f64> {
    let d: Vec<(f64, f64)> = a
        .iter()
        .filter_map(|&(g, y)| b.iter().find(|(h, _)| *h == g).map(|&(_, z)| (g, y - z)))
        .collect();
    d.windows(2).find_map(|w| {
        let ((g0, d0), (g1, d1)) = (w[0], w[1]);
        if d0 == 0.0 {
            Some(g0)
        } else if d0 * d1 < 0.0 {
            Some(g0 + (g1 - g0) * d0 / (d0 - d1))
        } else {
            None
        }
    })
}

struct Recipe<'a> {
    opts: &'a FigureOptions,
    dir: PathBuf,
    outcome: FigureOutcome,
}

impl Recipe<'_> {
    #[allow(clippy::too_many_arguments)]
    fn config(
        &self,
        name: &str,
        dim: usize,
        size: usize,
        gammas: &[f64],
        geometries: &[&str],
        observables: &[&str],
    ) -> RunConfig {
        RunConfig {
            lattice: LatticeSection { dim, size },
            evolution: EvolutionSection {
                gammas: gammas.to_vec(),
                dt: 0.05,
                burn_in: None,
                sample_interval: 2.0,
                samples: self.opts.samples,
                initial: "random_gaussian".into(),
            },
            ensemble: EnsembleSection {
                trajectories: self.opts.trajectories,
                seed: self.opts.seed,
                workers: self.opts.workers,
            },
            output: OutputSection {
                dir: self.dir.join(format!("{name}_L{size}")),
                geometries: geometries.iter().map(|s| s.to_string()).collect(),
                observables: observables.iter().map(|s| s.to_string()).collect(),
                binary_spectra: false,
            },
        }
    }

    fn run(&mut self, cfg: &RunConfig, diags: &[Diagnostic]) -> Result<PathBuf> {
        let report = simulate(cfg)?;
        let out = analyze(&report.run_dir, diags, &AnalyzeOptions::default())?;
        self.outcome.absorb(report.run_dir.clone(), out.reports, out.skipped);
        Ok(report.run_dir)
    }

    fn sizes(&self, default: &[usize]) -> Vec<usize> {
        self.opts.sizes.clone().unwrap_or_else(|| default.to_vec())
    }

    fn gammas(&self, default: &[f64]) -> Vec<f64> {
        self.opts.gammas.clone().unwrap_or_else(|| default.to_vec())
    }

    /// Concatenates per-size scalar reports into one `L,gamma,mean,stderr,n`
    /// table.
    fn combine(&mut self, name: &str, observable: &str, reports: &[PathBuf]) -> Result<()> {
        let mut rows = Vec::new();
        for p in reports {
            let (size, rs) = read_report(p)?;
            rows.extend(rs.iter().map(|r: &ReportRow| {
                format!("{size},{},{:.12e},{:.6e},{}", r.gamma, r.mean, r.stderr, r.count)
            }));
        }
        let prov = Provenance::new("-", self.opts.seed).with("observable", observable);
        self.table(name, &prov, "L,gamma,mean,stderr,n", &rows)
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
        let path = self.dir.join(name);
        write_atomic(&path, &out)?;
        self.outcome.reports.push(path);
        Ok(())
    }

    /// Runs a size sweep and returns the scalar report paths of each
    /// requested observable, in size order.
    fn sweep(
        &mut self,
        name: &str,
        dim: usize,
        sizes: &[usize],
        gammas: &[f64],
        observables: &[&str],
        diags: &[Diagnostic],
    ) -> Result<Vec<PathBuf>> {
        let mut runs = Vec::new();
        for &l in sizes {
            let cfg = self.config(name, dim, l, gammas, &["checkerboard"], observables);
            runs.push(self.run(&cfg, diags)?);
        }
        Ok(runs)
    }
}

fn report(run: &Path, diag: &str, geometry: &str) -> PathBuf {
    run.join("reports").join(format!("{diag}_{geometry}.csv"))
}

fn existing(paths: Vec<PathBuf>) -> Vec<PathBuf> {
    paths.into_iter().filter(|p| p.exists()).collect()
}

fn collapse_if_possible(r: &mut Recipe<'_>, reports: Vec<PathBuf>, observable: &str) {
    if reports.len() < 3 {
        r.outcome
            .skipped
            .push(format!("collapse of {observable}: needs 3 sizes, have {}", reports.len()));
        return;
    }
    match collapse_reports(&reports, observable, Ansatz::Linear, &CollapseOptions::default(), &r.dir) {
        Ok(c) => {
            r.outcome.reports.push(c.summary);
            r.outcome.reports.push(c.heatmap);
        }
        Err(e) => r.outcome.skipped.push(format!("collapse of {observable}: {e}")),
    }
}

/// Runs recipe `n` (1 to 8) under `opts.out/fig<n>`.
pub fn figure(n: u32, opts: &FigureOptions) -> Result<FigureOutcome> {
    let mut r = Recipe {
        opts,
        dir: opts.out.join(format!("fig{n}")),
        outcome: FigureOutcome::default(),
    };
    use Diagnostic as D;
    match n {
        // Entanglement density at the four fixed points, and its growth
        // from a Neel state.
        1 => {
            let gammas = r.gammas(&[0.05, 2.15, 5.1, 10.0]);
            for l in r.sizes(&[16]) {
                let cfg = r.config("curves", 2, l, &gammas, &["halfcut"], &["entropy_curve"]);
                r.run(&cfg, &[D::EntropyCurve])?;
                let mut dyn_cfg = r.config("dynamics", 2, l, &gammas, &["halfcut"], &["spectrum"]);
                dyn_cfg.evolution.initial = "neel".into();
                dyn_cfg.evolution.burn_in = Some(0.0);
                dyn_cfg.evolution.sample_interval = 0.5;
                dyn_cfg.evolution.samples = 4 * l;
                r.run(&dyn_cfg, &[D::EntropyTime])?;
            }
        }
        // Density of states on half-cut and checkerboard, and P(r).
        2 => {
            let gammas = r.gammas(&[0.1, 10.0]);
            for l in r.sizes(&[16]) {
                let cfg = r.config("dos", 2, l, &gammas, &["halfcut", "checkerboard"], &["spectrum"]);
                r.run(&cfg, &[D::Dos, D::RHist, D::GapRatio])?;
            }
        }
        // Short-range statistics in the two limits against L.
        3 => {
            let runs = r.sweep("limits", 2, &r.sizes(&[8, 12, 16]), &r.gammas(&[0.1, 10.0]), &["spectrum"], &[D::GapRatio, D::Kl1])?;
            r.combine("fig3_gap_ratio.csv", "gap_ratio", &existing(runs.iter().map(|p| report(p, "gap_ratio", "checkerboard")).collect()))?;
            r.combine("fig3_kl1.csv", "kl1", &existing(runs.iter().map(|p| report(p, "kl1", "checkerboard")).collect()))?;
        }
        // Long-range statistics in the two limits against L.
        4 => {
            let runs = r.sweep(
                "longrange",
                2,
                &r.sizes(&[8, 12, 16]),
                &r.gammas(&[0.1, 10.0]),
                &["spectrum", "kl2"],
                &[D::Sff, D::Thouless, D::Kl2],
            )?;
            r.combine("fig4_kl2.csv", "kl2", &existing(runs.iter().map(|p| report(p, "kl2", "checkerboard")).collect()))?;
        }
        // The transition in <r~> and KL1 and its scaling collapse.
        5 => {
            let default: Vec<f64> = (0..9).map(|i| 4.4 + 0.2 * i as f64).collect();
            let runs = r.sweep("transition", 2, &r.sizes(&[8, 12, 16]), &r.gammas(&default), &["spectrum"], &[D::GapRatio, D::Kl1])?;
            let gr = existing(runs.iter().map(|p| report(p, "gap_ratio", "checkerboard")).collect());
            let kl = existing(runs.iter().map(|p| report(p, "kl1", "checkerboard")).collect());
            r.combine("fig5_gap_ratio.csv", "gap_ratio", &gr)?;
            r.combine("fig5_kl1.csv", "kl1", &kl)?;
            collapse_if_possible(&mut r, gr, "gap_ratio");
            collapse_if_possible(&mut r, kl, "kl1");
        }
        // Form factor across the transition and the Thouless time.
        6 => {
            let runs = r.sweep(
                "thouless",
                2,
                &r.sizes(&[8, 12, 16]),
                &r.gammas(&[0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0]),
                &["spectrum", "kl2"],
                &[D::Sff, D::Thouless, D::Kl2],
            )?;
            let mut rows = Vec::new();
            for p in &runs {
                let m = RunManifest::load(p)?;
                let path = report(p, "thouless", "checkerboard");
                if path.exists() {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    rows.extend(
                        text.lines()
                            .filter(|l| !l.starts_with('#') && !l.starts_with("gamma"))
                            .map(|l| format!("{},{l}", m.size)),
                    );
                }
            }
            let prov = Provenance::new("-", opts.seed).with("observable", "thouless_time");
            r.table("fig6_thouless.csv", &prov, "L,gamma,tau_th,flagged,t_heisenberg", &rows)?;
            r.combine("fig6_kl2.csv", "kl2", &existing(runs.iter().map(|p| report(p, "kl2", "checkerboard")).collect()))?;
        }
        // One dimension: drift of the crossing points.
        7 => {
            let sizes = r.sizes(&[50, 100, 200]);
            let runs = r.sweep(
                "chain",
                1,
                &sizes,
                &r.gammas(&[0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0]),
                &["spectrum", "kl2"],
                &[D::GapRatio, D::Kl1, D::Kl2],
            )?;
            let gr = existing(runs.iter().map(|p| report(p, "gap_ratio", "checkerboard")).collect());
            r.combine("fig7_gap_ratio.csv", "gap_ratio", &gr)?;
            r.combine("fig7_kl1.csv", "kl1", &existing(runs.iter().map(|p| report(p, "kl1", "checkerboard")).collect()))?;
            r.combine("fig7_kl2.csv", "kl2", &existing(runs.iter().map(|p| report(p, "kl2", "checkerboard")).collect()))?;
            let curves = gr
                .iter()
                .map(|p| read_report(p).map(|(l, rows)| (l, rows.iter().map(|x| (x.gamma, x.mean)).collect::<Vec<_>>())))
                .collect::<Result<Vec<_>>>()?;
            let rows: Vec<String> = curves
                .windows(2)
                .map(|w| {
                    let c = curve_crossing(&w[0].1, &w[1].1).map_or("nan".to_string(), |g| g.to_string());
                    format!("{},{},{c}", w[0].0, w[1].0)
                })
                .collect();
            let prov = Provenance::new("-", opts.seed).with("observable", "gap_ratio crossing");
            r.table("fig7_crossings.csv", &prov, "L1,L2,gamma_cross", &rows)?;
        }
        // Half-system entropy prefactor and mutual information.
        8 => {
            let gammas = r.gammas(&[1.0, 1.5, 2.0, 2.15, 2.5, 3.0]);
            let ladder = r.sizes(&[4, 6, 8, 10, 12, 14, 16]);
            let mut entropies: Vec<Vec<(usize, f64)>> = vec![Vec::new(); gammas.len()];
            for &l in &ladder {
                let cfg = r.config("prefactor", 2, l, &gammas, &["halfcut"], &["spectrum", "mutual_info"]);
                let run = r.run(&cfg, &[D::MutualInformation])?;
                let m = RunManifest::load(&run)?;
                for (gi, e) in m.gammas.iter().enumerate() {
                    let rows = read_observables(&m.gamma_dir(&run, e).join("observables.csv"))?;
                    let acc: Accumulator = rows.iter().map(|o| o.entropy).collect();
                    entropies[gi].push((l, acc.mean()));
                }
            }
            let mut rows = Vec::new();
            let fit_sizes: Vec<usize> = ladder.iter().copied().filter(|&l| l >= 8).collect();
            for (g, s) in gammas.iter().zip(&entropies) {
                match prefactor_extraction(s, &fit_sizes, 2) {
                    Ok(fit) => {
                        for (l, c, b) in &fit.per_size {
                            rows.push(format!("{g},{l},{c:.8e},{b:.8e},{:.8e},{:.8e}", fit.c_inf, fit.c_inf_error));
                        }
                    }
                    Err(e) => r.outcome.skipped.push(format!("prefactor at gamma {g}: {e}")),
                }
            }
            let prov = Provenance::new("-", opts.seed).with("observable", "c(gamma)");
            r.table("fig8_prefactor.csv", &prov, "gamma,L,c,b,c_inf,c_inf_err", &rows)?;
            let mi: Vec<PathBuf> = existing(r.outcome.runs.iter().map(|p| p.join("reports").join("mutual_info.csv")).collect());
            r.combine("fig8_mutual_info.csv", "mutual_info", &mi)?;
        }
        _ => return Err(Error::Config(format!("no recipe for figure {n}; choose 1 to 8"))),
    }
    Ok(r.outcome)
}
