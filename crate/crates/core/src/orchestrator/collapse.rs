//! Scaling collapse over scalar reports from runs of different sizes.

use std::path::{Path, PathBuf};

use crate::collapse::{minimize_collapse, Ansatz, CollapseInput, CollapseOptions, CollapseRecord, CollapseResult};
use crate::error::{Error, Result};

use super::data::{parse_field, Table};
use super::{create_dir, header_value, sha256_hex, write_atomic, Provenance};

/// One line of a `gamma,mean,stderr,n` report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub gamma: f64,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Reads a scalar report and the system size recorded in its header.
pub fn read_report(path: &Path) -> Result<(usize, Vec<ReportRow>)> {
    let t = Table::read(path)?;
    let size: usize = header_value(&t.header, "size")
        .ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            reason: "header has no `size`".into(),
        })
        .and_then(|s| parse_field(s, path, "size"))?;
    let (cg, cm, cs, cn) = (
        t.column("gamma", path)?,
        t.column("mean", path)?,
        t.column("stderr", path)?,
        t.column("n", path)?,
    );
    let rows = t
        .rows
        .iter()
        .map(|r| {
            Ok(ReportRow {
                gamma: parse_field(&r[cg], path, "gamma")?,
                mean: parse_field(&r[cm], path, "mean")?,
                stderr: parse_field(&r[cs], path, "stderr")?,
                count: parse_field(&r[cn], path, "n")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((size, rows))
}

#[derive(Debug, Clone)]
pub struct CollapseOutcome {
    pub result: CollapseResult,
    pub summary: PathBuf,
    pub heatmap: PathBuf,
}

/// Collapses `observable` from `reports` (one per size) and writes
/// `collapse_<observable>_<ansatz>.csv` and the matching heatmap into
/// `out_dir`.
pub fn collapse_reports(
    reports: &[PathBuf],
    observable: &str,
    ansatz: Ansatz,
    opts: &CollapseOptions,
    out_dir: &Path,
) -> Result<CollapseOutcome> {
    let mut records = Vec::new();
    let mut sources = Vec::new();
    for path in reports {
        let (size, rows) = read_report(path)?;
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        sources.push(format!("{}:{}", path.display(), &sha256_hex(&bytes)[..16]));
        for r in rows {
            if r.stderr > 0.0 && r.mean.is_finite() {
                records.push(CollapseRecord {
                    gamma: r.gamma,
                    size,
                    y: r.mean,
                    sigma: r.stderr,
                });
            } else {
                log::warn!("{}: gamma {} has no usable error bar, dropped", path.display(), r.gamma);
            }
        }
    }
    let input = CollapseInput::new(observable, records)?;
    let result = minimize_collapse(&input, ansatz, opts)?;
    create_dir(out_dir)?;

    let sizes: Vec<String> = input.sizes().iter().map(|s| s.to_string()).collect();
    let prov = Provenance::new(&sha256_hex(sources.join(";").as_bytes()), 0)
        .with("observable", observable)
        .with("ansatz", ansatz.tag())
        .with("sizes", sizes.join(" "))
        .with("sources", sources.join(" "));
    let stem = format!("collapse_{observable}_{}", ansatz.tag());

    let mut out = Vec::new();
    prov.write(&mut out).expect("write to memory");
    out.extend_from_slice(CollapseResult::SUMMARY_HEADER.as_bytes());
    out.push(b'\n');
    out.extend_from_slice(result.summary_csv().as_bytes());
    out.push(b'\n');
    let summary = out_dir.join(format!("{stem}.csv"));
    write_atomic(&summary, &out)?;

    let mut out = Vec::new();
    result
        .heatmap
        .write_csv(&mut out, result.chi_min, &prov.header())
        .expect("write to memory");
    let heatmap = out_dir.join(format!("{stem}_heatmap.csv"));
    write_atomic(&heatmap, &out)?;

    Ok(CollapseOutcome {
        result,
        summary,
        heatmap,
    })
}
