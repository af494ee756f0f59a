use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use monfer::collapse::{Ansatz, CollapseOptions};
use monfer::orchestrator::{
    analyze, collapse_reports, figure, simulate, synthetic, AnalyzeOptions, Diagnostic, ExitStatus, FigureOptions,
    RunConfig, RunManifest, SyntheticOptions, MANIFEST_FILE,
};
use monfer::rmt::SyntheticKind;
use monfer::{Error, Result};

#[derive(Parser)]
#[command(name = "monfer", version, about = "Monitored free fermions: trajectories, entanglement spectra, RMT diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the trajectories of a configuration file (or rerun a manifest).
    Simulate {
        config: PathBuf,
        /// Override the worker count of the configuration.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Write diagnostic reports for a completed run directory.
    Analyze {
        run: PathBuf,
        /// Comma-separated list, or `all`.
        #[arg(long, default_value = "all")]
        diagnostics: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        r_bins: Option<usize>,
    },
    /// Finite-size-scaling collapse of scalar reports from several sizes.
    Collapse {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        observable: String,
        #[arg(long, default_value = "linear")]
        ansatz: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// `lo,hi` search range for gamma_c.
        #[arg(long)]
        gamma_c: Option<String>,
        /// `lo,hi` search range for nu.
        #[arg(long)]
        nu: Option<String>,
    },
    /// Write a GUE or Poisson calibration ensemble as a run directory.
    Synthetic {
        #[arg(long, default_value = "gue")]
        kind: String,
        #[arg(long, default_value_t = 200)]
        levels: usize,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        binary: bool,
    },
    /// Canned recipe reproducing figure 1 to 8 at a chosen scale.
    Figure {
        n: u32,
        #[arg(long, default_value = "figures")]
        out: PathBuf,
        /// Comma-separated system sizes.
        #[arg(long)]
        sizes: Option<String>,
        /// Comma-separated monitoring rates.
        #[arg(long)]
        gammas: Option<String>,
        #[arg(long, default_value_t = 16)]
        trajectories: usize,
        #[arg(long, default_value_t = 2)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Check every file of a run against the manifest checksums.
    Verify { run: PathBuf },
}

fn list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| Error::Config(format!("cannot parse {what} `{x}`"))))
        .collect()
}

fn range(s: &Option<String>, what: &str) -> Result<Option<(f64, f64)>> {
    match s {
        None => Ok(None),
        Some(s) => match list::<f64>(s, what)?.as_slice() {
            [lo, hi] if lo < hi => Ok(Some((*lo, *hi))),
            _ => Err(Error::Config(format!("{what} needs `lo,hi` with lo < hi"))),
        },
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let manifest_dir = if path.is_dir() {
        Some(path.to_path_buf())
    } else if path.file_name().is_some_and(|n| n == MANIFEST_FILE) {
        path.parent().map(Path::to_path_buf)
    } else {
        None
    };
    match manifest_dir {
        Some(dir) => RunManifest::load(&dir)?
            .config
            .ok_or_else(|| Error::Config(format!("{} records no configuration", path.display()))),
        None => RunConfig::load(path),
    }
}

fn run(cli: Cli) -> Result<ExitStatus> {
    match cli.command {
        Command::Simulate { config, workers } => {
            let mut cfg = load_config(&config)?;
            if let Some(w) = workers {
                cfg.ensemble.workers = w;
            }
            let r = simulate(&cfg)?;
            println!(
                "{}: {} files, {} units computed, {} reused",
                r.run_dir.display(),
                r.manifest.files.len(),
                r.computed,
                r.reused
            );
            Ok(ExitStatus::Success)
        }
        Command::Analyze {
            run,
            diagnostics,
            out,
            eta,
            r_bins,
        } => {
            let diags = Diagnostic::parse_list(&diagnostics)?;
            let mut opts = AnalyzeOptions {
                out_dir: out,
                ..Default::default()
            };
            if let Some(e) = eta {
                opts.eta = e;
            }
            if let Some(b) = r_bins {
                opts.r_bins = b;
            }
            let o = analyze(&run, &diags, &opts)?;
            for p in &o.reports {
                println!("{}", p.display());
            }
            for s in &o.skipped {
                eprintln!("skipped: {s}");
            }
            Ok(if o.skipped.is_empty() {
                ExitStatus::Success
            } else {
                ExitStatus::IncompleteData
            })
        }
        Command::Collapse {
            reports,
            observable,
            ansatz,
            out,
            gamma_c,
            nu,
        } => {
            let ansatz = Ansatz::parse(&ansatz).map_err(|e| Error::Config(e.to_string()))?;
            let mut opts = CollapseOptions {
                gamma_c_range: range(&gamma_c, "gamma_c")?,
                ..Default::default()
            };
            if let Some(r) = range(&nu, "nu")? {
                opts.nu_range = r;
            }
            let o = collapse_reports(&reports, &observable, ansatz, &opts, &out)?;
            let r = &o.result;
            println!(
                "gamma_c = {:.4} +- {:.4}, nu = {:.4} +- {:.4}, A = {:.4}, chi*/dof = {:.4}",
                r.gamma_c,
                r.gamma_c_error(),
                r.nu,
                r.nu_error(),
                r.a,
                r.chi_min / r.dof.max(1) as f64
            );
            println!("{}\n{}", o.summary.display(), o.heatmap.display());
            Ok(ExitStatus::Success)
        }
        Command::Synthetic {
            kind,
            levels,
            samples,
            seed,
            out,
            binary,
        } => {
            let kind = SyntheticKind::parse(&kind).map_err(|e| Error::Config(e.to_string()))?;
            let m = synthetic(&SyntheticOptions {
                kind,
                levels,
                samples,
                seed,
                dir: out.clone(),
                binary,
            })?;
            println!("{}: {} ({} spectra)", out.display(), m.kind, samples);
            Ok(ExitStatus::Success)
        }
        Command::Figure {
            n,
            out,
            sizes,
            gammas,
            trajectories,
            samples,
            seed,
            workers,
        } => {
            let opts = FigureOptions {
                out,
                sizes: sizes.as_deref().map(|s| list(s, "size")).transpose()?,
                gammas: gammas.as_deref().map(|s| list(s, "gamma")).transpose()?,
                trajectories,
                samples,
                seed,
                workers,
            };
            let o = figure(n, &opts)?;
            for p in &o.reports {
                println!("{}", p.display());
            }
            for s in &o.skipped {
                eprintln!("skipped: {s}");
            }
            Ok(if o.skipped.is_empty() {
                ExitStatus::Success
            } else {
                ExitStatus::IncompleteData
            })
        }
        Command::Verify { run } => {
            let m = RunManifest::load(&run)?;
            let bad = m.verify(&run);
            for b in &bad {
                eprintln!("checksum mismatch: {b}");
            }
            if !m.complete {
                eprintln!("run is marked incomplete");
                return Ok(ExitStatus::IncompleteData);
            }
            if bad.is_empty() {
                println!("{} files verified", m.files.len());
                Ok(ExitStatus::Success)
            } else {
                Ok(ExitStatus::RuntimeFailure)
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(ExitStatus::ConfigError as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let status = match run(cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::of_error(&e)
        }
    };
    ExitCode::from(status as u8)
}
