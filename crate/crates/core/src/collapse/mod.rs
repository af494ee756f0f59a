//! Finite-size-scaling collapse of `y(gamma, L)` onto one curve of
//! `x = (gamma - gamma_c) L^(1/nu) (1 + A (gamma - gamma_c))`.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{fit_spline, nelder_mead, SimplexOptions};
use crate::stats::weighted_mean;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseRecord {
    pub gamma: f64,
    pub size: usize,
    pub y: f64,
    pub sigma: f64,
}

/// One observable measured on a `(gamma, L)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseInput {
    pub observable: String,
    records: Vec<CollapseRecord>,
}

impl CollapseInput {
    pub fn new(observable: impl Into<String>, records: Vec<CollapseRecord>) -> Result<Self> {
        if let Some(r) = records.iter().find(|r| !(r.sigma > 0.0) || !r.y.is_finite() || !r.gamma.is_finite()) {
            return Err(Error::param("records", format!("need finite y and sigma > 0, got {r:?}")));
        }
        let sizes: BTreeSet<usize> = records.iter().map(|r| r.size).collect();
        if sizes.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "collapse needs 3 sizes, got {}",
                sizes.len()
            )));
        }
        for &l in &sizes {
            let n = records.iter().filter(|r| r.size == l).count();
            if n < 5 {
                return Err(Error::InsufficientData(format!("size {l} has {n} gamma points, need 5")));
            }
        }
        Ok(CollapseInput {
            observable: observable.into(),
            records,
        })
    }

    pub fn records(&self) -> &[CollapseRecord] {
        &self.records
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.size).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn gamma_range(&self) -> (f64, f64) {
        self.records
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.gamma), hi.max(r.gamma)))
    }

    /// Copy with every error bar multiplied by `k`.
    pub fn with_scaled_errors(&self, k: f64) -> Self {
        let mut c = self.clone();
        for r in c.records.iter_mut() {
            r.sigma *= k;
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaledPoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

/// Rescaled abscissae sorted by `x`. Records with
/// `|gamma - gamma_c| L^(1/nu)` above `window` are dropped.
pub fn rescale_windowed(input: &CollapseInput, gamma_c: f64, nu: f64, a: f64, window: Option<f64>) -> Vec<RescaledPoint> {
    let mut pts: Vec<RescaledPoint> = input
        .records
        .iter()
        .filter_map(|r| {
            let d = r.gamma - gamma_c;
            let scale = (r.size as f64).powf(1.0 / nu);
            if let Some(w) = window {
                if (d * scale).abs() > w {
                    return None;
                }
            }
            Some(RescaledPoint {
                x: d * scale * (1.0 + a * d),
                y: r.y,
                sigma: r.sigma,
            })
        })
        .collect();
    pts.sort_by(|p, q| p.x.total_cmp(&q.x));
    pts
}

pub fn rescale(input: &CollapseInput, gamma_c: f64, nu: f64, a: f64) -> Vec<RescaledPoint> {
    rescale_windowed(input, gamma_c, nu, a, None)
}

/// Interior spline knots used for `n` points.
pub fn collapse_knots(n: usize) -> usize {
    12.min(n.div_ceil(8))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cost {
    pub chi2: f64,
    pub dof: usize,
}

impl Cost {
    pub fn per_dof(&self) -> f64 {
        if self.dof == 0 {
            f64::INFINITY
        } else {
            self.chi2 / self.dof as f64
        }
    }
}

/// Weighted residual sum of squares of `points` about a least-squares
/// cubic spline through them. Infinite when the spline cannot be fitted.
pub fn collapse_cost(points: &[RescaledPoint]) -> Cost {
    let n = points.len();
    let knots = collapse_knots(n);
    let bad = Cost {
        chi2: f64::INFINITY,
        dof: 0,
    };
    if n < 10 {
        return bad;
    }
    let x: Vec<f64> = points.iter().map(|p| p.x).collect();
    let y: Vec<f64> = points.iter().map(|p| p.y).collect();
    let w: Vec<f64> = points.iter().map(|p| p.sigma.powi(-2)).collect();
    match fit_spline(&x, &y, &w, knots) {
        Ok(s) => {
            let chi2 = points.iter().map(|p| ((p.y - s.eval(p.x)) / p.sigma).powi(2)).sum();
            Cost {
                chi2,
                dof: n.saturating_sub(s.coefficients().len()),
            }
        }
        Err(_) => bad,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ansatz {
    Linear,
    Nonlinear,
}

impl Ansatz {
    pub fn tag(&self) -> &'static str {
        match self {
            Ansatz::Linear => "linear",
            Ansatz::Nonlinear => "nonlinear",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "linear" => Ok(Ansatz::Linear),
            "nonlinear" => Ok(Ansatz::Nonlinear),
            _ => Err(Error::param("ansatz", format!("unknown ansatz {tag:?}"))),
        }
    }
}

/// Search box and resolution of the coarse scan.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseOptions {
    /// Defaults to the measured gamma range.
    pub gamma_c_range: Option<(f64, f64)>,
    pub nu_range: (f64, f64),
    pub a_range: (f64, f64),
    pub grid: usize,
    pub a_grid: usize,
    /// Optional cut on `|gamma - gamma_c| L^(1/nu)`.
    pub window: Option<f64>,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        CollapseOptions {
            gamma_c_range: None,
            nu_range: (0.3, 3.0),
            a_range: (-1.0, 1.0),
            grid: 41,
            a_grid: 11,
            window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub gamma_c: Vec<f64>,
    pub nu: Vec<f64>,
    /// `chi2[i][j]` at `(gamma_c[i], nu[j])`.
    pub chi2: Vec<Vec<f64>>,
}

impl Heatmap {
    /// CSV of `(gamma_c, nu, chi / chi*)`, truncated at `4 chi*`.
    pub fn write_csv<W: Write>(&self, mut out: W, chi_min: f64, header: &[(String, String)]) -> std::io::Result<()> {
        for (k, v) in header {
            writeln!(out, "# {k} = {v}")?;
        }
        writeln!(out, "gamma_c,nu,cost_ratio")?;
        for (i, g) in self.gamma_c.iter().enumerate() {
            for (j, n) in self.nu.iter().enumerate() {
                let r = (self.chi2[i][j] / chi_min).min(4.0);
                writeln!(out, "{g:.6},{n:.6},{r:.6}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseResult {
    pub observable: String,
    pub ansatz: Ansatz,
    pub gamma_c: f64,
    pub nu: f64,
    pub a: f64,
    pub chi_min: f64,
    pub dof: usize,
    /// `{chi <= chi* + 4}` along each axis with the others at the optimum.
    pub gamma_c_interval: (f64, f64),
    pub nu_interval: (f64, f64),
    pub a_interval: Option<(f64, f64)>,
    pub heatmap: Heatmap,
    /// Optimum on the edge of the search box, or the simplex did not settle.
    pub on_boundary: bool,
    pub converged: bool,
}

impl CollapseResult {
    pub fn gamma_c_error(&self) -> f64 {
        0.5 * (self.gamma_c_interval.1 - self.gamma_c_interval.0)
    }

    pub fn nu_error(&self) -> f64 {
        0.5 * (self.nu_interval.1 - self.nu_interval.0)
    }

    pub fn summary_csv(&self) -> String {
        format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6e},{},{}",
            self.observable,
            self.ansatz.tag(),
            self.gamma_c,
            self.gamma_c_error(),
            self.nu,
            self.nu_error(),
            self.a,
            self.chi_min,
            self.dof,
            if self.on_boundary || !self.converged { "unconverged" } else { "ok" }
        )
    }

    pub const SUMMARY_HEADER: &'static str = "observable,ansatz,gamma_c,gamma_c_err,nu,nu_err,A,chi_min,dof,status";
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Walks from `x0` in direction `dir` until `f > level`, then bisects.
/// Stops at `limit` if the level is never exceeded.
fn crossing(f: &dyn Fn(f64) -> f64, x0: f64, dir: f64, step: f64, limit: f64, level: f64) -> f64 {
    let mut inside = x0;
    let mut x = x0;
    loop {
        let next = x + dir * step;
        if (dir > 0.0 && next >= limit) || (dir < 0.0 && next <= limit) {
            if f(limit) <= level {
                return limit;
            }
            x = limit;
            break;
        }
        if f(next) > level {
            x = next;
            break;
        }
        inside = next;
        x = next;
    }
    let mut outside = x;
    for _ in 0..50 {
        let mid = 0.5 * (inside + outside);
        if f(mid) <= level {
            inside = mid;
        } else {
            outside = mid;
        }
        if (outside - inside).abs() < 1e-7 * (1.0 + inside.abs()) {
            break;
        }
    }
    inside
}

/// Coarse scan over `(gamma_c, nu[, A])`, simplex polish from the best
/// grid point, and `chi* + 4` error intervals.
pub fn minimize_collapse(input: &CollapseInput, ansatz: Ansatz, opts: &CollapseOptions) -> Result<CollapseResult> {
    if opts.grid < 3 {
        return Err(Error::param("grid", "need at least 3 points per axis"));
    }
    let (glo, ghi) = opts.gamma_c_range.unwrap_or_else(|| input.gamma_range());
    let (nlo, nhi) = opts.nu_range;
    if !(ghi > glo) || !(nhi > nlo) || nlo <= 0.0 {
        return Err(Error::param("range", "empty gamma_c or nu search range"));
    }
    let chi = |g: f64, nu: f64, a: f64| -> f64 {
        if nu <= 0.0 {
            return f64::INFINITY;
        }
        collapse_cost(&rescale_windowed(input, g, nu, a, opts.window)).chi2
    };
    let gs = linspace(glo, ghi, opts.grid);
    let ns = linspace(nlo, nhi, opts.grid);
    let as_: Vec<f64> = match ansatz {
        Ansatz::Linear => vec![0.0],
        Ansatz::Nonlinear => linspace(opts.a_range.0, opts.a_range.1, opts.a_grid.max(2)),
    };
    let (nn, na) = (ns.len(), as_.len());
    let cells: Vec<(usize, usize, usize)> = (0..gs.len())
        .flat_map(|i| (0..nn).flat_map(move |j| (0..na).map(move |k| (i, j, k))))
        .collect();
    let costs: Vec<f64> = cells.par_iter().map(|&(i, j, k)| chi(gs[i], ns[j], as_[k])).collect();
    let best = (0..cells.len())
        .min_by(|&p, &q| costs[p].total_cmp(&costs[q]))
        .expect("grid is nonempty");
    if !costs[best].is_finite() {
        return Err(Error::FitFailed("collapse cost is infinite on the whole grid".into()));
    }
    let (bi, bj, bk) = cells[best];

    let dg = gs[1] - gs[0];
    let dn = ns[1] - ns[0];
    let (x0, step) = match ansatz {
        Ansatz::Linear => (vec![gs[bi], ns[bj]], vec![dg, dn]),
        Ansatz::Nonlinear => {
            let da = if as_.len() > 1 { as_[1] - as_[0] } else { 0.1 };
            (vec![gs[bi], ns[bj], as_[bk]], vec![dg, dn, da])
        }
    };
    // The simplex stays inside the scanned box; an optimum on its edge is
    // reported through `on_boundary`.
    let inside = |p: &[f64]| {
        (glo..=ghi).contains(&p[0])
            && (nlo..=nhi).contains(&p[1])
            && p.get(2).is_none_or(|a| (opts.a_range.0..=opts.a_range.1).contains(a))
    };
    let res = nelder_mead(
        |p| {
            if inside(p) {
                chi(p[0], p[1], if p.len() > 2 { p[2] } else { 0.0 })
            } else {
                f64::INFINITY
            }
        },
        &x0,
        &step,
        SimplexOptions {
            max_evals: 3000,
            f_tol: 1e-12,
            x_tol: 1e-7,
        },
    );
    let (mut g_opt, mut n_opt, mut a_opt, mut chi_min) = (res.x[0], res.x[1], res.x.get(2).copied().unwrap_or(0.0), res.value);
    if !(chi_min <= costs[best]) {
        g_opt = gs[bi];
        n_opt = ns[bj];
        a_opt = as_[bk];
        chi_min = costs[best];
    }
    let level = chi_min + 4.0;
    let on_boundary = g_opt <= glo + 0.5 * dg
        || g_opt >= ghi - 0.5 * dg
        || n_opt <= nlo + 0.5 * dn
        || n_opt >= nhi - 0.5 * dn
        || (ansatz == Ansatz::Nonlinear && (a_opt <= opts.a_range.0 || a_opt >= opts.a_range.1));

    let fg = |g: f64| chi(g, n_opt, a_opt);
    let fnu = |n: f64| chi(g_opt, n, a_opt);
    let g_int = (
        crossing(&fg, g_opt, -1.0, 0.25 * dg, glo - 0.5 * (ghi - glo), level),
        crossing(&fg, g_opt, 1.0, 0.25 * dg, ghi + 0.5 * (ghi - glo), level),
    );
    let n_int = (
        crossing(&fnu, n_opt, -1.0, 0.25 * dn, (0.5 * nlo).max(1e-3), level),
        crossing(&fnu, n_opt, 1.0, 0.25 * dn, 2.0 * nhi, level),
    );
    let a_int = (ansatz == Ansatz::Nonlinear).then(|| {
        let fa = |a: f64| chi(g_opt, n_opt, a);
        let span = opts.a_range.1 - opts.a_range.0;
        (
            crossing(&fa, a_opt, -1.0, 0.02 * span, opts.a_range.0 - span, level),
            crossing(&fa, a_opt, 1.0, 0.02 * span, opts.a_range.1 + span, level),
        )
    });

    let heat: Vec<f64> = (0..gs.len() * ns.len())
        .into_par_iter()
        .map(|c| chi(gs[c / ns.len()], ns[c % ns.len()], a_opt))
        .collect();
    let heatmap = Heatmap {
        gamma_c: gs.clone(),
        nu: ns.clone(),
        chi2: heat.chunks(ns.len()).map(|r| r.to_vec()).collect(),
    };
    let dof = collapse_cost(&rescale_windowed(input, g_opt, n_opt, a_opt, opts.window)).dof;
    Ok(CollapseResult {
        observable: input.observable.clone(),
        ansatz,
        gamma_c: g_opt,
        nu: n_opt,
        a: a_opt,
        chi_min,
        dof,
        gamma_c_interval: g_int,
        nu_interval: n_int,
        a_interval: a_int,
        heatmap,
        on_boundary,
        converged: res.converged,
    })
}

/// Inverse-variance weighted `(value, error)` of `gamma_c` and `nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedEstimate {
    pub gamma_c: (f64, f64),
    pub nu: (f64, f64),
}

pub fn weighted_average_estimates(results: &[CollapseResult]) -> Result<CombinedEstimate> {
    combine_estimates(
        &results.iter().map(|r| (r.gamma_c, r.gamma_c_error())).collect::<Vec<_>>(),
        &results.iter().map(|r| (r.nu, r.nu_error())).collect::<Vec<_>>(),
    )
}

/// Same as [`weighted_average_estimates`] on bare `(value, error)` pairs.
pub fn combine_estimates(gamma_c: &[(f64, f64)], nu: &[(f64, f64)]) -> Result<CombinedEstimate> {
    if gamma_c.len() == 1 && nu.len() == 1 {
        return Ok(CombinedEstimate {
            gamma_c: gamma_c[0],
            nu: nu[0],
        });
    }
    Ok(CombinedEstimate {
        gamma_c: weighted_mean(gamma_c)?,
        nu: weighted_mean(nu)?,
    })
}
