use std::fs;
use std::path::Path;

use monfer::orchestrator::{
    analyze, read_report, simulate, synthetic, AnalyzeOptions, Diagnostic, RunConfig, RunManifest, SyntheticOptions,
};
use monfer::rmt::SyntheticKind;
use monfer::Error;

fn config(dir: &Path, workers: usize, samples: usize) -> RunConfig {
    let text = format!(
        r#"
[lattice]
dim = 2
size = 4

[evolution]
gammas = [0.5, 4.0]
burn_in = 1.0
sample_interval = 0.5
samples = {samples}

[ensemble]
trajectories = 5
seed = 11
workers = {workers}

[output]
dir = "{}"
geometries = ["checkerboard", "halfcut"]
observables = ["spectrum", "kl2", "entropy_curve", "mutual_info"]
"#,
        dir.display()
    );
    RunConfig::parse(&text).unwrap()
}

fn data_files(run: &Path) -> Vec<(String, Vec<u8>)> {
    let m = RunManifest::load(run).unwrap();
    m.files
        .iter()
        .map(|f| (f.path.clone(), fs::read(run.join(&f.path)).unwrap()))
        .collect()
}

#[test]
fn same_seed_gives_identical_bytes_for_any_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let a = simulate(&config(&tmp.path().join("a"), 1, 2)).unwrap();
    let b = simulate(&config(&tmp.path().join("b"), 2, 2)).unwrap();
    assert_eq!(a.computed, 6);
    assert!(a.manifest.complete);
    let fa = data_files(&a.run_dir);
    assert!(!fa.is_empty());
    assert_eq!(fa, data_files(&b.run_dir));
    assert_eq!(a.manifest.config_hash, b.manifest.config_hash);
    assert!(a.manifest.verify(&a.run_dir).is_empty());
}

#[test]
fn interrupted_run_resumes_from_records() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(&tmp.path().join("run"), 1, 2);
    let first = simulate(&cfg).unwrap();
    let before = data_files(&first.run_dir);
    let records = first.run_dir.join("records").join("gamma_4");
    let mut recs: Vec<_> = fs::read_dir(&records).unwrap().map(|e| e.unwrap().path()).collect();
    recs.sort();
    fs::remove_file(&recs[0]).unwrap();
    fs::remove_file(&recs[2]).unwrap();
    for (p, _) in &before {
        fs::remove_file(first.run_dir.join(p)).unwrap();
    }
    let second = simulate(&cfg).unwrap();
    assert_eq!((second.computed, second.reused), (2, 4));
    assert_eq!(before, data_files(&second.run_dir));
}

#[test]
fn zero_samples_gives_an_empty_inventory() {
    let tmp = tempfile::tempdir().unwrap();
    let r = simulate(&config(&tmp.path().join("run"), 1, 0)).unwrap();
    assert!(r.manifest.complete);
    assert!(r.manifest.files.is_empty());
}

#[test]
fn rerun_into_a_foreign_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    simulate(&config(&dir, 1, 1)).unwrap();
    let mut other = config(&dir, 1, 1);
    other.ensemble.seed = 12;
    assert!(matches!(simulate(&other), Err(Error::Config(_))));
}

#[test]
fn analyze_writes_reports_for_a_simulated_run() {
    let tmp = tempfile::tempdir().unwrap();
    let r = simulate(&config(&tmp.path().join("run"), 0, 2)).unwrap();
    let out = analyze(&r.run_dir, &Diagnostic::ALL, &AnalyzeOptions::default()).unwrap();
    assert!(out.skipped.is_empty(), "{:?}", out.skipped);
    for name in ["gap_ratio_checkerboard.csv", "kl1_halfcut.csv", "kl2_checkerboard.csv", "mutual_info.csv"] {
        assert!(r.run_dir.join("reports").join(name).exists(), "{name}");
    }
    let (size, rows) = read_report(&r.run_dir.join("reports/gap_ratio_checkerboard.csv")).unwrap();
    assert_eq!(size, 4);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].count, 10);
    assert!(rows.iter().all(|r| r.mean > 0.0 && r.mean < 1.0));
    assert!(r.run_dir.join("reports/index.toml").exists());
}

#[test]
fn empty_diagnostic_list_is_a_no_op() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nothing-here");
    let out = analyze(&missing, &[], &AnalyzeOptions::default()).unwrap();
    assert!(out.reports.is_empty());
    assert!(!missing.exists());
}

#[test]
fn incomplete_runs_are_not_analyzed() {
    let tmp = tempfile::tempdir().unwrap();
    let r = simulate(&config(&tmp.path().join("run"), 1, 1)).unwrap();
    let mut m = r.manifest.clone();
    m.complete = false;
    m.save(&r.run_dir).unwrap();
    let e = analyze(&r.run_dir, &[Diagnostic::GapRatio], &AnalyzeOptions::default()).unwrap_err();
    assert!(matches!(e, Error::Incomplete(_)));
}

#[test]
fn synthetic_ensembles_calibrate_the_gap_ratio() {
    let tmp = tempfile::tempdir().unwrap();
    for (kind, expected, binary) in [(SyntheticKind::Poisson, 0.3863, false), (SyntheticKind::Gue, 0.6027, true)] {
        let dir = tmp.path().join(kind.tag());
        synthetic(&SyntheticOptions {
            kind,
            levels: 200,
            samples: 100,
            seed: 3,
            dir: dir.clone(),
            binary,
        })
        .unwrap();
        analyze(&dir, &[Diagnostic::GapRatio], &AnalyzeOptions::default()).unwrap();
        let (_, rows) = read_report(&dir.join("reports/gap_ratio_synthetic.csv")).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].mean - expected).abs() < 0.015, "{}: {}", kind.tag(), rows[0].mean);
    }
}
