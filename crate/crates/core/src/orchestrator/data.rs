//! Persisted data tables: spectra (CSV or binary) and per-sample
//! observables.
//!
//! Binary spectra layout, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes  "MFSPEC01"
//! header_len   u32      length of the UTF-8 provenance text that follows
//! header       bytes    "# key = value" lines
//! repeated until end of file:
//!   trajectory u64
//!   sample     u32
//!   time       f64
//!   n          u32      number of levels
//!   energies   n x f64  ascending
//!   saturated  n x u8   0 or 1
//! ```

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectrum::EntanglementSpectrum;

use super::{read_header, Provenance};

pub const BINARY_MAGIC: &[u8; 8] = b"MFSPEC01";

pub const SPECTRA_COLUMNS: &str = "trajectory,sample,time,index,energy,saturated";
pub const OBSERVABLE_COLUMNS: &str = "geometry,trajectory,sample,time,mean_r,kl1,entropy,n_levels,n_saturated";

/// One persisted spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub trajectory: u64,
    pub sample: usize,
    pub time: f64,
    pub energies: Vec<f64>,
    pub saturated: Vec<bool>,
}

impl SpectrumRow {
    pub fn from_spectrum(trajectory: u64, sample: usize, time: f64, s: &EntanglementSpectrum) -> Self {
        SpectrumRow {
            trajectory,
            sample,
            time,
            energies: s.energies().to_vec(),
            saturated: s.saturated().to_vec(),
        }
    }

    pub fn to_spectrum(&self) -> Result<EntanglementSpectrum> {
        let mut s = EntanglementSpectrum::from_levels(self.energies.clone(), self.saturated.clone())?;
        s.meta.trajectory = self.trajectory;
        s.meta.sample = self.sample;
        s.meta.time = self.time;
        Ok(s)
    }
}

/// Scalars recorded for one spectrum. `kl1` is NaN when eigenvectors were
/// not available.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRow {
    pub geometry: String,
    pub trajectory: u64,
    pub sample: usize,
    pub time: f64,
    pub mean_r: f64,
    pub kl1: f64,
    pub entropy: f64,
    pub n_levels: usize,
    pub n_saturated: usize,
}

impl ObservableRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{:e},{:e},{:e},{},{}",
            self.geometry,
            self.trajectory,
            self.sample,
            self.time,
            self.mean_r,
            self.kl1,
            self.entropy,
            self.n_levels,
            self.n_saturated
        )
    }
}

fn bad(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Header, column names and split rows of a small CSV table.
pub(crate) struct Table {
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let header = read_header(text);
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let columns: Vec<String> = lines
            .next()
            .ok_or_else(|| bad(path, "no column line"))?
            .split(',')
            .map(|c| c.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, l) in lines.enumerate() {
            let row: Vec<String> = l.split(',').map(|c| c.trim().to_string()).collect();
            if row.len() != columns.len() {
                return Err(bad(path, format!("row {} has {} fields, expected {}", i + 1, row.len(), columns.len())));
            }
            rows.push(row);
        }
        Ok(Table { header, columns, rows })
    }

    pub fn column(&self, name: &str, path: &Path) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| bad(path, format!("missing column `{name}`")))
    }
}

pub(crate) fn parse_field<T: std::str::FromStr>(s: &str, path: &Path, what: &str) -> Result<T> {
    s.parse().map_err(|_| bad(path, format!("cannot parse {what} from `{s}`")))
}

pub fn write_spectra_csv(rows: &[SpectrumRow], prov: &Provenance) -> Vec<u8> {
    let mut out = Vec::new();
    prov.write(&mut out).expect("write to memory");
    writeln!(out, "{SPECTRA_COLUMNS}").expect("write to memory");
    for r in rows {
        for (i, (e, s)) in r.energies.iter().zip(&r.saturated).enumerate() {
            writeln!(out, "{},{},{},{},{:e},{}", r.trajectory, r.sample, r.time, i, e, *s as u8)
                .expect("write to memory");
        }
    }
    out
}

pub fn write_binary_spectra(rows: &[SpectrumRow], prov: &Provenance) -> Vec<u8> {
    let mut text = Vec::new();
    prov.write(&mut text).expect("write to memory");
    let mut out = Vec::with_capacity(16 + text.len() + rows.iter().map(|r| 24 + 9 * r.energies.len()).sum::<usize>());
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(&text);
    for r in rows {
        out.extend_from_slice(&r.trajectory.to_le_bytes());
        out.extend_from_slice(&(r.sample as u32).to_le_bytes());
        out.extend_from_slice(&r.time.to_le_bytes());
        out.extend_from_slice(&(r.energies.len() as u32).to_le_bytes());
        for e in &r.energies {
            out.extend_from_slice(&e.to_le_bytes());
        }
        out.extend(r.saturated.iter().map(|&s| s as u8));
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(bad(self.path, "truncated binary spectra"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Returns the provenance header and the spectra of a binary table.
pub fn read_binary_spectra(bytes: &[u8], path: &Path) -> Result<(Vec<(String, String)>, Vec<SpectrumRow>)> {
    let mut c = Cursor { bytes, pos: 0, path };
    if c.take(8)? != BINARY_MAGIC {
        return Err(bad(path, "not a binary spectra file"));
    }
    let hlen = c.u32()? as usize;
    let text = std::str::from_utf8(c.take(hlen)?).map_err(|_| bad(path, "header is not UTF-8"))?;
    let header = read_header(text);
    let mut rows = Vec::new();
    while c.pos < bytes.len() {
        let trajectory = c.u64()?;
        let sample = c.u32()? as usize;
        let time = c.f64()?;
        let n = c.u32()? as usize;
        let energies = (0..n).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
        let saturated = c.take(n)?.iter().map(|&b| b != 0).collect();
        rows.push(SpectrumRow {
            trajectory,
            sample,
            time,
            energies,
            saturated,
        });
    }
    Ok((header, rows))
}

/// Reads a spectra table in either format, chosen by extension.
pub fn read_spectra(path: &Path) -> Result<(Vec<(String, String)>, Vec<SpectrumRow>)> {
    if path.extension().is_some_and(|e| e == "bin") {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        return read_binary_spectra(&bytes, path);
    }
    let t = Table::read(path)?;
    let (ct, cs, ctime, ce, csat) = (
        t.column("trajectory", path)?,
        t.column("sample", path)?,
        t.column("time", path)?,
        t.column("energy", path)?,
        t.column("saturated", path)?,
    );
    let mut rows: Vec<SpectrumRow> = Vec::new();
    for r in &t.rows {
        let trajectory: u64 = parse_field(&r[ct], path, "trajectory")?;
        let sample: usize = parse_field(&r[cs], path, "sample")?;
        let e: f64 = parse_field(&r[ce], path, "energy")?;
        let sat = r[csat] == "1";
        match rows.last_mut() {
            Some(last) if last.trajectory == trajectory && last.sample == sample => {
                last.energies.push(e);
                last.saturated.push(sat);
            }
            _ => rows.push(SpectrumRow {
                trajectory,
                sample,
                time: parse_field(&r[ctime], path, "time")?,
                energies: vec![e],
                saturated: vec![sat],
            }),
        }
    }
    Ok((t.header, rows))
}

pub fn read_observables(path: &Path) -> Result<Vec<ObservableRow>> {
    let t = Table::read(path)?;
    let idx = OBSERVABLE_COLUMNS
        .split(',')
        .map(|c| t.column(c, path))
        .collect::<Result<Vec<_>>>()?;
    t.rows
        .iter()
        .map(|r| {
            Ok(ObservableRow {
                geometry: r[idx[0]].clone(),
                trajectory: parse_field(&r[idx[1]], path, "trajectory")?,
                sample: parse_field(&r[idx[2]], path, "sample")?,
                time: parse_field(&r[idx[3]], path, "time")?,
                mean_r: parse_field(&r[idx[4]], path, "mean_r")?,
                kl1: parse_field(&r[idx[5]], path, "kl1")?,
                entropy: parse_field(&r[idx[6]], path, "entropy")?,
                n_levels: parse_field(&r[idx[7]], path, "n_levels")?,
                n_saturated: parse_field(&r[idx[8]], path, "n_saturated")?,
            })
        })
        .collect()
}
