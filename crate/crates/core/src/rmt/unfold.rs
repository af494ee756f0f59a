//! Unfolding to unit mean level spacing through a smoothed,
//! trajectory-averaged cumulative level count.

use crate::error::{Error, Result};
use crate::numerics::{fit_spline, interp_linear, isotonic, CubicSpline};

#[derive(Debug, Clone)]
enum Map {
    Spline(CubicSpline),
    Linear { xs: Vec<f64>, ys: Vec<f64> },
}

/// Smooth approximation of the averaged cumulative count `C(e)`.
#[derive(Debug, Clone)]
pub struct Unfolding {
    map: Map,
}

impl Unfolding {
    /// Fits `C(e)` to the pooled levels of `spectra` (each sorted).
    pub fn fit<S: AsRef<[f64]>>(spectra: &[S]) -> Result<Self> {
        let n_spec = spectra.len();
        let mut pooled: Vec<f64> = spectra.iter().flat_map(|s| s.as_ref().iter().copied()).collect();
        if pooled.is_empty() {
            return Err(Error::InsufficientData("nothing to unfold".into()));
        }
        if pooled.iter().any(|e| !e.is_finite()) {
            return Err(Error::param("levels", "non-finite level"));
        }
        pooled.sort_by(f64::total_cmp);
        let ns = n_spec as f64;
        let counts: Vec<f64> = (0..pooled.len()).map(|k| (k as f64 + 0.5) / ns).collect();

        let mean_m = pooled.len() as f64 / ns;
        let mut distinct = pooled.clone();
        distinct.dedup();
        let knots = 10usize.max((mean_m / 50.0).ceil() as usize).min(distinct.len() / 4);
        if distinct.len() >= 8 {
            if let Ok(mut spline) = fit_spline(&pooled, &counts, &vec![1.0; pooled.len()], knots) {
                let projected = isotonic(spline.coefficients());
                spline.coefficients_mut().copy_from_slice(&projected);
                if spline.is_monotone_on(&distinct) {
                    return Ok(Unfolding { map: Map::Spline(spline) });
                }
            }
            log::warn!("monotone spline unfolding failed; using linear interpolation");
        }
        Ok(Unfolding::linear(&pooled, &counts))
    }

    fn linear(pooled: &[f64], counts: &[f64]) -> Self {
        let mut xs: Vec<f64> = Vec::with_capacity(pooled.len());
        let mut ys: Vec<f64> = Vec::with_capacity(pooled.len());
        for (&x, &y) in pooled.iter().zip(counts) {
            if xs.last() == Some(&x) {
                *ys.last_mut().unwrap() = y;
            } else {
                xs.push(x);
                ys.push(y);
            }
        }
        Unfolding {
            map: Map::Linear { xs, ys },
        }
    }

    pub fn is_spline(&self) -> bool {
        matches!(self.map, Map::Spline(_))
    }

    pub fn apply(&self, e: f64) -> f64 {
        match &self.map {
            Map::Spline(s) => s.eval(e),
            Map::Linear { xs, ys } => interp_linear(xs, ys, e),
        }
    }

    pub fn apply_all(&self, levels: &[f64]) -> Vec<f64> {
        levels.iter().map(|&e| self.apply(e)).collect()
    }
}

/// Unfolded copies of every spectrum, using one shared smooth count.
pub fn unfold<S: AsRef<[f64]>>(spectra: &[S]) -> Result<Vec<Vec<f64>>> {
    let u = Unfolding::fit(spectra)?;
    Ok(spectra.iter().map(|s| u.apply_all(s.as_ref())).collect())
}

/// Mean spacing of the unfolded levels whose midpoints fall inside the
/// central `fraction` of each spectrum's range.
pub fn bulk_mean_spacing<S: AsRef<[f64]>>(spectra: &[S], fraction: f64) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for s in spectra {
        let s = s.as_ref();
        if s.len() < 2 {
            continue;
        }
        let (lo, hi) = (s[0], s[s.len() - 1]);
        let c = 0.5 * (lo + hi);
        let half = 0.5 * fraction * (hi - lo);
        for w in s.windows(2) {
            if (0.5 * (w[0] + w[1]) - c).abs() <= half {
                sum += w[1] - w[0];
                n += 1;
            }
        }
    }
    (n > 0).then(|| sum / n as f64)
}
