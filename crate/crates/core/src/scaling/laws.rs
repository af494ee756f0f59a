//! Closed-form entanglement-density laws.

use std::f64::consts::PI;

use super::special::{dedekind_eta, digamma, jacobi_theta3};
use crate::error::{Error, Result};

/// Entropy density of a random Gaussian state. Evaluated for
/// `l <= L/2` and mirrored above.
pub fn page_law_density(l: usize, size: usize) -> Result<f64> {
    if size == 0 || l > size {
        return Err(Error::param("l_A", format!("need 0 <= l_A <= L, got {l} for L = {size}")));
    }
    let l = l.min(size - l);
    if l == 0 {
        return Ok(0.0);
    }
    let (lf, n) = (l as f64, size as f64);
    Ok((n - 0.5) * digamma(2.0 * n)?
        + (0.5 + lf - n) * digamma(2.0 * n - 2.0 * lf)?
        + (0.25 - lf) * digamma(n)?
        - 0.25 * digamma(n - lf)?
        - lf)
}

/// `(1/3) ln[L sin(pi l / L)] + s0`.
pub fn fermi_liquid_density(l: usize, size: usize, s0: f64) -> Result<f64> {
    if l == 0 || l >= size {
        return Err(Error::param("l_A", format!("need 0 < l_A < L, got {l} for L = {size}")));
    }
    let n = size as f64;
    Ok((n * (PI * l as f64 / n).sin()).ln() / 3.0 + s0)
}

/// `J(u) = ln[theta_3(i lambda u) theta_3(i lambda (1-u)) / (eta(2iu) eta(2i(1-u)))]`.
pub fn lifshitz_j(u: f64, lambda: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::param("u", format!("need 0 < u < 1, got {u}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", "must be positive"));
    }
    let v = 1.0 - u;
    let num = jacobi_theta3(lambda * u)? * jacobi_theta3(lambda * v)?;
    let den = dedekind_eta(2.0 * u)? * dedekind_eta(2.0 * v)?;
    Ok((num / den).ln())
}

/// `a J(l/L) / L + b`.
pub fn lifshitz_density(l: usize, size: usize, a: f64, b: f64, lambda: f64) -> Result<f64> {
    if l == 0 || l >= size {
        return Err(Error::param("l_A", format!("need 0 < l_A < L, got {l} for L = {size}")));
    }
    let n = size as f64;
    Ok(a * lifshitz_j(l as f64 / n, lambda)? / n + b)
}
