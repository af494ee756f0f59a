//! Kullback-Leibler divergences between eigenmode densities.

use crate::error::{Error, Result};

/// Floor applied to densities before taking logarithms.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// `sum_i p_i ln(p_i / q_i)` with both densities floored.
pub fn kl_pair(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            let a = a.max(DENSITY_FLOOR);
            a * (a / b.max(DENSITY_FLOOR)).ln()
        })
        .sum()
}

fn check(densities: &[Vec<f64>]) -> Result<usize> {
    let m = densities.len();
    if m < 2 {
        return Err(Error::InsufficientData("KL divergence needs two modes".into()));
    }
    let n = densities[0].len();
    if densities.iter().any(|d| d.len() != n) {
        return Err(Error::param("densities", "modes live on different supports"));
    }
    Ok(n)
}

fn check_size(size: usize) -> Result<()> {
    if size == 0 {
        return Err(Error::param("size", "linear size must be positive"));
    }
    Ok(())
}

/// `(2/L) sum_a KL(|psi_a|^2 || |psi_{a+1}|^2)` over consecutive modes of
/// one spectrum, modes ordered by energy.
pub fn kl1(densities: &[Vec<f64>], size: usize) -> Result<f64> {
    check_size(size)?;
    check(densities)?;
    let s: f64 = densities.windows(2).map(|w| kl_pair(&w[0], &w[1])).sum();
    Ok(2.0 * s / size as f64)
}

/// Same summand with mode `a` of one realization against mode `a + 1` of
/// another.
pub fn kl2(first: &[Vec<f64>], second: &[Vec<f64>], size: usize) -> Result<f64> {
    check_size(size)?;
    let n = check(first)?;
    if check(second)? != n || first.len() != second.len() {
        return Err(Error::param("densities", "paired spectra differ in shape"));
    }
    let s: f64 = (0..first.len() - 1)
        .map(|a| kl_pair(&first[a], &second[a + 1]))
        .sum();
    Ok(2.0 * s / size as f64)
}
