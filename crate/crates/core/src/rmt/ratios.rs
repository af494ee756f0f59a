//! Ratios of consecutive level spacings.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::simpson;
use crate::stats::{Accumulator, Estimate};

/// Spacings below this are treated as degeneracies and skipped.
pub const DEGENERATE_SPACING: f64 = 1e-13;

/// Poisson value of the mean of `r~`, `2 ln 2 - 1`.
pub const MEAN_R_POISSON: f64 = 0.386_29;
/// Large-N GUE value of the mean of `r~`.
pub const MEAN_R_GUE: f64 = 0.602_66;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GapRatios {
    /// `r_a = s_{a-1} / s_a`.
    pub r: Vec<f64>,
    /// `min(r, 1/r)`.
    pub r_tilde: Vec<f64>,
    /// Number of skipped degenerate spacings.
    pub skipped: usize,
}

impl GapRatios {
    pub fn mean_tilde(&self) -> Option<f64> {
        if self.r_tilde.is_empty() {
            None
        } else {
            Some(self.r_tilde.iter().sum::<f64>() / self.r_tilde.len() as f64)
        }
    }
}

/// Gap ratios of a sorted spectrum.
pub fn gap_ratios(levels: &[f64]) -> Result<GapRatios> {
    if levels.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "gap ratios need 3 levels, got {}",
            levels.len()
        )));
    }
    if levels.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("levels", "must be sorted ascending"));
    }
    let mut skipped = 0;
    let spacings: Vec<f64> = levels
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&s| {
            let keep = s >= DEGENERATE_SPACING;
            if !keep {
                skipped += 1;
            }
            keep
        })
        .collect();
    let r: Vec<f64> = spacings.windows(2).map(|s| s[0] / s[1]).collect();
    let r_tilde = r.iter().map(|&x| x.min(1.0 / x)).collect();
    Ok(GapRatios { r, r_tilde, skipped })
}

/// Mean `r~` per spectrum, then averaged over spectra. The error is the
/// spectrum-to-spectrum standard error.
pub fn mean_gap_ratio<'a, I>(spectra: I) -> Result<Estimate>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut acc = Accumulator::new();
    for levels in spectra {
        if let Some(m) = gap_ratios(levels)?.mean_tilde() {
            acc.push(m);
        }
    }
    if acc.count() == 0 {
        return Err(Error::InsufficientData("no spectrum with a gap ratio".into()));
    }
    Ok(acc.estimate())
}

/// `P(r) = 1 / (1 + r)^2`.
pub fn poisson_r_density(r: f64) -> f64 {
    1.0 / (1.0 + r).powi(2)
}

/// Wigner-like surmise for the unitary class,
/// `P(r) = (81 sqrt3 / 4 pi) (r + r^2)^2 / (1 + r + r^2)^4`.
pub fn gue_r_density(r: f64) -> f64 {
    let z = 81.0 * 3f64.sqrt() / (4.0 * PI);
    z * (r + r * r).powi(2) / (1.0 + r + r * r).powi(4)
}

/// Histogram of pooled `r` values normalized as a density on `[0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Includes values beyond the last edge.
    pub total: usize,
}

impl RHistogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    pub fn density(&self) -> Vec<f64> {
        self.edges
            .windows(2)
            .zip(&self.counts)
            .map(|(e, &c)| c as f64 / (self.total as f64 * (e[1] - e[0])))
            .collect()
    }

    /// Expected bin probabilities under `pdf`.
    pub fn expected(&self, pdf: impl Fn(f64) -> f64) -> Vec<f64> {
        self.edges
            .windows(2)
            .map(|e| simpson(&pdf, e[0], e[1], 16))
            .collect()
    }

    /// Pearson chi-square per degree of freedom against `pdf`, over bins
    /// with at least five expected counts.
    pub fn chi2_per_dof(&self, pdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.total as f64;
        let mut chi2 = 0.0;
        let mut dof = 0usize;
        for (p, &c) in self.expected(pdf).iter().zip(&self.counts) {
            let e = p * n;
            if e >= 5.0 {
                chi2 += (c as f64 - e).powi(2) / e;
                dof += 1;
            }
        }
        if dof == 0 {
            f64::NAN
        } else {
            chi2 / dof as f64
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W, header: &[(String, String)]) -> std::io::Result<()> {
        for (k, v) in header {
            writeln!(out, "# {k} = {v}")?;
        }
        writeln!(out, "r,density,poisson,gue,count")?;
        for ((c, d), n) in self.centers().iter().zip(self.density()).zip(&self.counts) {
            writeln!(out, "{c:.6},{d:.8e},{:.8e},{:.8e},{n}", poisson_r_density(*c), gue_r_density(*c))?;
        }
        Ok(())
    }
}

/// Histogram of `r` pooled over all spectra with `bins` bins on `[0, r_max]`.
pub fn r_distribution<'a, I>(spectra: I, bins: usize, r_max: f64) -> Result<RHistogram>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    if bins == 0 || !(r_max > 0.0) {
        return Err(Error::param("bins", "need bins > 0 and r_max > 0"));
    }
    let width = r_max / bins as f64;
    let mut counts = vec![0; bins];
    let mut total = 0;
    for levels in spectra {
        for r in gap_ratios(levels)?.r {
            total += 1;
            if r < r_max {
                counts[((r / width) as usize).min(bins - 1)] += 1;
            }
        }
    }
    Ok(RHistogram {
        edges: (0..=bins).map(|k| k as f64 * width).collect(),
        counts,
        total,
    })
}
