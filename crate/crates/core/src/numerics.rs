//! Least-squares cubic B-splines, isotonic projection and a Nelder-Mead
//! simplex minimizer.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Cubic B-spline with clamped boundary knots.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    knots: Vec<f64>,
    coefs: Vec<f64>,
}

impl CubicSpline {
    pub fn lo(&self) -> f64 {
        self.knots[0]
    }

    pub fn hi(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefs
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefs
    }

    /// Value at `x`; outside the knot range the end cubic is continued.
    pub fn eval(&self, x: f64) -> f64 {
        let (k, b) = basis(&self.knots, self.coefs.len(), x);
        (0..4).map(|r| self.coefs[k - 3 + r] * b[r]).sum()
    }

    /// True if the spline is nondecreasing on `xs` (assumed sorted).
    pub fn is_monotone_on(&self, xs: &[f64]) -> bool {
        let mut prev = f64::NEG_INFINITY;
        for &x in xs {
            let v = self.eval(x);
            if v < prev - 1e-12 * prev.abs().max(1.0) {
                return false;
            }
            prev = v;
        }
        true
    }
}

/// Span index `k` and the four nonzero basis values `N_{k-3..=k}(x)`.
fn basis(knots: &[f64], n: usize, x: f64) -> (usize, [f64; 4]) {
    // Spans run from knots[3] to knots[n]; clamp to the end spans.
    let mut k = match knots[3..=n].partition_point(|&t| t <= x) {
        0 => 3,
        p => p + 2,
    };
    k = k.clamp(3, n - 1);
    let mut left = [0.0; 4];
    let mut right = [0.0; 4];
    let mut nb = [0.0; 4];
    nb[0] = 1.0;
    for j in 1..=3 {
        left[j] = x - knots[k + 1 - j];
        right[j] = knots[k + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = nb[r] / (right[r + 1] + left[j - r]);
            nb[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        nb[j] = saved;
    }
    (k, nb)
}

/// Weighted least-squares cubic spline with `interior` knots placed at
/// quantiles of the distinct abscissae.
pub fn fit_spline(x: &[f64], y: &[f64], w: &[f64], interior: usize) -> Result<CubicSpline> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::param("spline", "x, y and w differ in length"));
    }
    if x.iter().chain(y).chain(w).any(|v| !v.is_finite()) || w.iter().any(|&v| v < 0.0) {
        return Err(Error::param("spline", "non-finite input or negative weight"));
    }
    let mut xs: Vec<f64> = x.to_vec();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 {
        return Err(Error::FitFailed("spline abscissae are degenerate".into()));
    }
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let min_gap = 1e-9 * (hi - lo);
    let mut inner = Vec::with_capacity(interior);
    for q in 1..=interior {
        let pos = q as f64 / (interior + 1) as f64 * (xs.len() - 1) as f64;
        let i = pos.floor() as usize;
        let f = pos - i as f64;
        let t = if i + 1 < xs.len() { xs[i] * (1.0 - f) + xs[i + 1] * f } else { xs[i] };
        let last = inner.last().copied().unwrap_or(lo);
        if t - last > min_gap && hi - t > min_gap {
            inner.push(t);
        }
    }
    let mut knots = vec![lo; 4];
    knots.extend(&inner);
    knots.extend([hi; 4]);
    let n = inner.len() + 4;

    let mut ata = Mat::<f64>::zeros(n, n);
    let mut atb = vec![0.0; n];
    for i in 0..x.len() {
        let (k, b) = basis(&knots, n, x[i]);
        for r in 0..4 {
            let a = k - 3 + r;
            atb[a] += w[i] * b[r] * y[i];
            for s in 0..4 {
                ata[(a, k - 3 + s)] += w[i] * b[r] * b[s];
            }
        }
    }
    // A small ridge keeps empty knot spans solvable.
    let scale = (0..n).map(|i| ata[(i, i)]).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::FitFailed("spline has no weighted data".into()));
    }
    for i in 0..n {
        ata[(i, i)] += 1e-12 * scale;
    }
    let llt = ata
        .llt(Side::Lower)
        .map_err(|e| Error::FitFailed(format!("spline normal equations: {e:?}")))?;
    let mut sol = Mat::<f64>::from_fn(n, 1, |i, _| atb[i]);
    llt.solve_in_place(&mut sol);
    let coefs: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    if coefs.iter().any(|c| !c.is_finite()) {
        return Err(Error::FitFailed("spline coefficients are not finite".into()));
    }
    Ok(CubicSpline { knots, coefs })
}

/// Nearest nondecreasing sequence in the least-squares sense (pool adjacent
/// violators), equal weights.
pub fn isotonic(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, n2) = blocks[blocks.len() - 1];
            let (m1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let n = n1 + n2;
            *blocks.last_mut().unwrap() = ((m1 * n1 as f64 + m2 * n2 as f64) / n as f64, n);
        }
    }
    blocks.into_iter().flat_map(|(m, n)| std::iter::repeat_n(m, n)).collect()
}

/// Linear interpolation through sorted `(xs, ys)`, constant outside.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[k - 1], xs[k]);
    if x1 == x0 {
        return ys[k];
    }
    ys[k - 1] + (ys[k] - ys[k - 1]) * (x - x0) / (x1 - x0)
}

/// Options for [`nelder_mead`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Stop when the spread of function values falls below this.
    pub f_tol: f64,
    /// Stop when the simplex diameter falls below this.
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_evals: 2000,
            f_tol: 1e-10,
            x_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Derivative-free minimization starting from `x0` with initial edge
/// lengths `step`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: &[f64], opts: SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p, &mut evals)).collect();
    let mut converged = false;
    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = (vals[n] - vals[0]).abs();
        let diam = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= opts.f_tol * (1.0 + vals[0].abs()) && diam <= opts.x_tol.max(1e-15) {
            converged = true;
            break;
        }
        if diam <= opts.x_tol * 1e-3 {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (pts[n][j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            let p: Vec<f64> = (0..n).map(|j| pts[0][j] + 0.5 * (pts[i][j] - pts[0][j])).collect();
            vals[i] = eval(&p, &mut evals);
            pts[i] = p;
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    SimplexResult {
        x: pts[best].clone(),
        value: vals[best],
        evals,
        converged,
    }
}

/// Composite Simpson integral of `f` over `[a, b]` with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(2) + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}
