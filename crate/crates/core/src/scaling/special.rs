//! Digamma, the theta constant `theta_3(0 | i x)` and the Dedekind eta
//! function on the imaginary axis.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `Psi(z) = Gamma'(z) / Gamma(z)` for `z > 0`.
pub fn digamma(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::param("z", format!("digamma needs z > 0, got {z}")));
    }
    let mut x = z;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    // Bernoulli tail: B_2k / (2k x^2k) for k = 1..7.
    let tail = x2
        * (1.0 / 12.0
            - x2 * (1.0 / 120.0
                - x2 * (1.0 / 252.0
                    - x2 * (1.0 / 240.0 - x2 * (1.0 / 132.0 - x2 * (691.0 / 32760.0 - x2 / 12.0))))));
    Ok(acc + x.ln() - 0.5 / x - tail)
}

/// `theta_3(0 | i x) = sum_n exp(-pi x n^2)`.
pub fn jacobi_theta3(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::param("x", format!("theta_3 needs x > 0, got {x}")));
    }
    let mut sum = 1.0;
    let mut n = 1.0f64;
    loop {
        let term = 2.0 * (-PI * x * n * n).exp();
        sum += term;
        if term < 1e-15 * sum {
            return Ok(sum);
        }
        n += 1.0;
    }
}

/// `eta(i y) = exp(-pi y / 12) prod_n (1 - exp(-2 pi n y))`.
pub fn dedekind_eta(y: f64) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::param("y", format!("eta needs y > 0, got {y}")));
    }
    let q = (-2.0 * PI * y).exp();
    let mut log_prod = 0.0;
    let mut qn = q;
    while qn >= 1e-17 {
        log_prod += (-qn).ln_1p();
        qn *= q;
    }
    Ok((-PI * y / 12.0 + log_prod).exp())
}
