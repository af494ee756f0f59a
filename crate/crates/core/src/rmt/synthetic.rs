//! Calibration ensembles with known level statistics.

use faer::{c64, Mat, Side};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::trajectory::trajectory_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    Gue,
    Poisson,
}

impl SyntheticKind {
    pub fn tag(&self) -> &'static str {
        match self {
            SyntheticKind::Gue => "gue",
            SyntheticKind::Poisson => "poisson",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "gue" => Ok(SyntheticKind::Gue),
            "poisson" => Ok(SyntheticKind::Poisson),
            _ => Err(Error::param("kind", format!("unknown ensemble {tag:?}"))),
        }
    }
}

/// Sorted eigenvalues of an `n x n` GUE matrix.
pub fn gue_spectrum<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let mut h = Mat::<c64>::zeros(n, n);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..n {
        let d: f64 = rng.sample(StandardNormal);
        h[(j, j)] = c64::new(d, 0.0);
        for i in j + 1..n {
            let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            h[(i, j)] = c64::new(a * s, b * s);
            h[(j, i)] = c64::new(a * s, -b * s);
        }
    }
    let mut ev = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// `n` sorted independent uniform levels on `[0, n)`.
pub fn poisson_spectrum<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * n as f64).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `samples` independent spectra; sample `i` uses stream `i` of `seed`.
pub fn synthetic_ensemble(kind: SyntheticKind, n: usize, samples: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    (0..samples)
        .map(|i| {
            let mut rng = trajectory_rng(seed, i as u64);
            match kind {
                SyntheticKind::Gue => gue_spectrum(n, &mut rng),
                SyntheticKind::Poisson => Ok(poisson_spectrum(n, &mut rng)),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sorted() {
        let a = synthetic_ensemble(SyntheticKind::Gue, 20, 3, 9).unwrap();
        let b = synthetic_ensemble(SyntheticKind::Gue, 20, 3, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|s| s.windows(2).all(|w| w[0] <= w[1])));
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn gue_semicircle_width() {
        // Off-diagonal variance 1 gives a semicircle of radius 2 sqrt(n).
        let s = synthetic_ensemble(SyntheticKind::Gue, 100, 4, 1).unwrap();
        for v in s {
            assert!(v[99] < 2.3 * 10.0 && v[99] > 1.7 * 10.0);
        }
    }
}
