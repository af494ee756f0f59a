//! Filtered spectral form factor and the Thouless time read off from it.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::stats::Accumulator;

/// Default filter width in units of the spectral standard deviation.
pub const DEFAULT_ETA: f64 = 0.5;
/// Default tolerance on `|ln K - ln K_GUE|`.
pub const THOULESS_TOL: f64 = 0.05;

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Ramp-plateau form factor of the unitary ensemble.
pub fn gue_form_factor(tau: f64) -> f64 {
    tau.min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SffCurve {
    pub tau: Vec<f64>,
    pub t: Vec<f64>,
    pub k: Vec<f64>,
    pub k_err: Vec<f64>,
    pub t_heisenberg: f64,
    /// Mean unfolded spacing inside the filter windows.
    pub mean_spacing: f64,
    pub spectra: usize,
}

impl SffCurve {
    /// Mean of `K` over grid points with `tau` in `[a, b]`.
    pub fn mean_over(&self, a: f64, b: f64) -> Option<f64> {
        let acc: Accumulator = self
            .tau
            .iter()
            .zip(&self.k)
            .filter(|(t, _)| **t >= a && **t <= b)
            .map(|(_, k)| *k)
            .collect();
        (acc.count() > 0).then(|| acc.mean())
    }

    /// Root-mean-square relative deviation from the GUE form on `[a, b]`.
    pub fn gue_rms_deviation(&self, a: f64, b: f64) -> Option<f64> {
        let acc: Accumulator = self
            .tau
            .iter()
            .zip(&self.k)
            .filter(|(t, _)| **t >= a && **t <= b)
            .map(|(t, k)| {
                let g = gue_form_factor(*t);
                ((k - g) / g).powi(2)
            })
            .collect();
        (acc.count() > 0).then(|| acc.mean().sqrt())
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W, header: &[(String, String)]) -> std::io::Result<()> {
        for (k, v) in header {
            writeln!(out, "# {k} = {v}")?;
        }
        writeln!(out, "# t_heisenberg = {}", self.t_heisenberg)?;
        writeln!(out, "t,tau,K,K_err")?;
        for i in 0..self.tau.len() {
            writeln!(out, "{:.8e},{:.8e},{:.8e},{:.8e}", self.t[i], self.tau[i], self.k[i], self.k_err[i])?;
        }
        Ok(())
    }
}

struct Filtered {
    levels: Vec<f64>,
    weights: Vec<f64>,
    z: f64,
}

fn filter(levels: &[f64], eta: f64) -> Result<Filtered> {
    if levels.is_empty() {
        return Err(Error::InsufficientData("empty spectrum in form factor".into()));
    }
    let n = levels.len() as f64;
    let mean = levels.iter().sum::<f64>() / n;
    let var = levels.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    let width = eta * var.sqrt();
    let weights: Vec<f64> = if width > 0.0 {
        levels.iter().map(|e| (-(e - mean).powi(2) / (2.0 * width * width)).exp()).collect()
    } else {
        vec![1.0; levels.len()]
    };
    let z: f64 = weights.iter().map(|g| g * g).sum();
    if !(z > 0.0) {
        return Err(Error::InsufficientData("empty filter window".into()));
    }
    Ok(Filtered {
        levels: levels.to_vec(),
        weights,
        z,
    })
}

/// `K(t) = < |sum_a g(e_a) exp(i e_a t)|^2 / Z >` on the rescaled grid
/// `tau`, with `t = tau T_H` and `T_H = 2 pi / spacing`. Spectra must be
/// unfolded and sorted.
pub fn spectral_form_factor<S: AsRef<[f64]>>(unfolded: &[S], tau: &[f64], eta: f64) -> Result<SffCurve> {
    if unfolded.is_empty() {
        return Err(Error::InsufficientData("form factor of an empty ensemble".into()));
    }
    if !(eta > 0.0) {
        return Err(Error::param("eta", "must be positive"));
    }
    let filtered = unfolded
        .iter()
        .map(|s| filter(s.as_ref(), eta))
        .collect::<Result<Vec<_>>>()?;

    // Spacing weighted by the filter at each midpoint.
    let (mut sw, mut s) = (0.0, 0.0);
    for f in &filtered {
        for i in 1..f.levels.len() {
            let w = (f.weights[i] * f.weights[i - 1]).sqrt();
            sw += w;
            s += w * (f.levels[i] - f.levels[i - 1]);
        }
    }
    let mean_spacing = if sw > 0.0 { s / sw } else { 1.0 };
    let t_h = 2.0 * PI / mean_spacing;

    let t: Vec<f64> = tau.iter().map(|x| x * t_h).collect();
    let mut accs = vec![Accumulator::new(); t.len()];
    for f in &filtered {
        for (ti, acc) in t.iter().zip(accs.iter_mut()) {
            let (mut re, mut im) = (0.0, 0.0);
            for (e, g) in f.levels.iter().zip(&f.weights) {
                let (sn, cs) = (e * ti).sin_cos();
                re += g * cs;
                im += g * sn;
            }
            acc.push((re * re + im * im) / f.z);
        }
    }
    Ok(SffCurve {
        tau: tau.to_vec(),
        t,
        k: accs.iter().map(|a| a.mean()).collect(),
        k_err: accs.iter().map(|a| a.stderr()).collect(),
        t_heisenberg: t_h,
        mean_spacing,
        spectra: unfolded.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThoulessTime {
    pub tau: f64,
    /// Set when no agreement with the GUE ramp was found before the
    /// plateau, i.e. the curve is Poisson-like.
    pub flagged: bool,
}

/// Earliest grid `tau` from which `|ln K - ln K_GUE| < tol` holds at every
/// later grid point up to `tau = 1`.
///
/// A flat `K = 1` agrees with the ramp within `tol` on `[exp(-tol), 1]`
/// without any level correlations, so a crossing that only starts there is
/// reported as `tau = 1` and flagged.
pub fn thouless_time(curve: &SffCurve, tol: f64) -> Result<ThoulessTime> {
    let idx: Vec<usize> = (0..curve.tau.len()).filter(|&i| curve.tau[i] <= 1.0).collect();
    if idx.is_empty() {
        return Err(Error::InsufficientData("form factor grid has no point below tau = 1".into()));
    }
    let ok = |i: usize| {
        let k = curve.k[i];
        k > 0.0 && (k.ln() - gue_form_factor(curve.tau[i]).ln()).abs() < tol
    };
    let mut start = None;
    for &i in idx.iter().rev() {
        if ok(i) {
            start = Some(i);
        } else {
            break;
        }
    }
    let poisson = ThoulessTime { tau: 1.0, flagged: true };
    Ok(match start {
        Some(i) if curve.tau[i] < (-tol).exp() => ThoulessTime {
            tau: curve.tau[i],
            flagged: false,
        },
        _ => poisson,
    })
}
