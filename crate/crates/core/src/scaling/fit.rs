//! Least-squares matching of entanglement-density curves to the laws, and
//! the extraction of the `L ln L` prefactor of half-system entropies.

use super::laws::{fermi_liquid_density, lifshitz_j, page_law_density};
use crate::error::{Error, Result};
use crate::numerics::{nelder_mead, SimplexOptions};
use crate::observables::ObservableSeries;
use crate::stats::fit_line;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingLaw {
    Page,
    FermiLiquid,
    Lifshitz,
    Area,
}

impl ScalingLaw {
    pub const ALL: [ScalingLaw; 4] = [
        ScalingLaw::Page,
        ScalingLaw::FermiLiquid,
        ScalingLaw::Lifshitz,
        ScalingLaw::Area,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            ScalingLaw::Page => "page",
            ScalingLaw::FermiLiquid => "fermi_liquid",
            ScalingLaw::Lifshitz => "lifshitz",
            ScalingLaw::Area => "area",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.tag() == tag)
            .ok_or_else(|| Error::param("law", format!("unknown law {tag:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingLawFit {
    pub law: ScalingLaw,
    pub params: Vec<(&'static str, f64)>,
    /// Unweighted root-mean-square residual.
    pub residual_rms: f64,
    pub chi2: f64,
}

impl ScalingLawFit {
    pub const CSV_HEADER: &'static str = "law,params,residual_rms,chi2";

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }

    pub fn csv_row(&self) -> String {
        let params: Vec<String> = self.params.iter().map(|(n, v)| format!("{n}={v:.8}")).collect();
        format!("{},{},{:.8e},{:.8e}", self.law.tag(), params.join(";"), self.residual_rms, self.chi2)
    }
}

/// Lambda grid scanned before the simplex polish.
pub const LAMBDA_GRID: (f64, f64, usize) = (0.2, 3.0, 57);

struct Points {
    l: Vec<usize>,
    y: Vec<f64>,
    w: Vec<f64>,
}

fn points(series: &ObservableSeries) -> Result<Points> {
    if series.points.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "law fits need 5 points, got {}",
            series.points.len()
        )));
    }
    let mut p = Points {
        l: Vec::new(),
        y: Vec::new(),
        w: Vec::new(),
    };
    for pt in &series.points {
        if pt.x < 0.0 || pt.x.fract() != 0.0 {
            return Err(Error::param("l_A", format!("not a subsystem width: {}", pt.x)));
        }
        p.l.push(pt.x as usize);
        p.y.push(pt.mean);
        // Points without a usable error bar get unit weight.
        p.w.push(if pt.stderr > 0.0 { pt.stderr.powi(-2) } else { 1.0 });
    }
    Ok(p)
}

fn finish(law: ScalingLaw, params: Vec<(&'static str, f64)>, p: &Points, model: &[f64]) -> ScalingLawFit {
    let n = p.y.len() as f64;
    let mut rss = 0.0;
    let mut chi2 = 0.0;
    for i in 0..p.y.len() {
        let r = p.y[i] - model[i];
        rss += r * r;
        chi2 += p.w[i] * r * r;
    }
    ScalingLawFit {
        law,
        params,
        residual_rms: (rss / n).sqrt(),
        chi2,
    }
}

/// Weighted least squares of `y = a f + b`; returns `(a, b)`.
fn linear_ab(f: &[f64], y: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    let sw: f64 = w.iter().sum();
    let mf = f.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sff: f64 = f.iter().zip(w).map(|(a, b)| b * (a - mf).powi(2)).sum();
    if sff <= 1e-14 * sw * (mf * mf).max(1.0) {
        return Err(Error::FitFailed("singular normal equations".into()));
    }
    let sfy: f64 = (0..f.len()).map(|i| w[i] * (f[i] - mf) * (y[i] - my)).sum();
    let a = sfy / sff;
    Ok((a, my - a * mf))
}

/// Fits `series` (abscissa `l_A`, system size `size`) to `law`.
pub fn fit_scaling_law(series: &ObservableSeries, size: usize, law: ScalingLaw) -> Result<ScalingLawFit> {
    let p = points(series)?;
    let sw: f64 = p.w.iter().sum();
    match law {
        ScalingLaw::Page => {
            let model = p.l.iter().map(|&l| page_law_density(l, size)).collect::<Result<Vec<_>>>()?;
            Ok(finish(law, vec![], &p, &model))
        }
        ScalingLaw::Area => {
            let c = p.y.iter().zip(&p.w).map(|(y, w)| y * w).sum::<f64>() / sw;
            Ok(finish(law, vec![("constant", c)], &p, &vec![c; p.y.len()]))
        }
        ScalingLaw::FermiLiquid => {
            let base = p.l.iter().map(|&l| fermi_liquid_density(l, size, 0.0)).collect::<Result<Vec<_>>>()?;
            let s0 = (0..p.y.len()).map(|i| p.w[i] * (p.y[i] - base[i])).sum::<f64>() / sw;
            let model: Vec<f64> = base.iter().map(|b| b + s0).collect();
            Ok(finish(law, vec![("s0", s0)], &p, &model))
        }
        ScalingLaw::Lifshitz => {
            let n = size as f64;
            if p.l.iter().any(|&l| l == 0 || l >= size) {
                return Err(Error::param("l_A", "Lifshitz fit needs 0 < l_A < L"));
            }
            let profile = |lambda: f64| -> Result<(f64, f64, f64)> {
                let f = p
                    .l
                    .iter()
                    .map(|&l| lifshitz_j(l as f64 / n, lambda).map(|j| j / n))
                    .collect::<Result<Vec<_>>>()?;
                let (a, b) = linear_ab(&f, &p.y, &p.w)?;
                let chi2 = (0..f.len()).map(|i| p.w[i] * (p.y[i] - a * f[i] - b).powi(2)).sum();
                Ok((chi2, a, b))
            };
            let (lo, hi, steps) = LAMBDA_GRID;
            let mut best: Option<(f64, f64)> = None;
            for k in 0..steps {
                let lambda = lo + (hi - lo) * k as f64 / (steps - 1) as f64;
                let (c, _, _) = profile(lambda)?;
                if best.is_none_or(|(bc, _)| c < bc) {
                    best = Some((c, lambda));
                }
            }
            let (_, l0) = best.expect("grid is nonempty");
            let step = (hi - lo) / (steps - 1) as f64;
            let res = nelder_mead(
                |x| {
                    if x[0] <= 0.0 {
                        return f64::INFINITY;
                    }
                    profile(x[0]).map_or(f64::INFINITY, |(c, _, _)| c)
                },
                &[l0],
                &[step],
                SimplexOptions {
                    max_evals: 200,
                    f_tol: 1e-12,
                    x_tol: 1e-6,
                },
            );
            let lambda = if res.value.is_finite() { res.x[0] } else { l0 };
            let (_, a, b) = profile(lambda)?;
            let model = p
                .l
                .iter()
                .map(|&l| lifshitz_j(l as f64 / n, lambda).map(|j| a * j / n + b))
                .collect::<Result<Vec<_>>>()?;
            Ok(finish(law, vec![("a", a), ("b", b), ("lambda", lambda)], &p, &model))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrefactorFit {
    /// `(L, c(L), b(L))` for each analysed size.
    pub per_size: Vec<(usize, f64, f64)>,
    /// Intercept of `c(L) = m / L + c_inf`.
    pub c_inf: f64,
    pub c_inf_error: f64,
    pub slope: f64,
}

/// `entropies` holds `(L~, S(L~))` half-system entropies. For every
/// `L` in `sizes`, `S / L~` is fitted linearly against `ln L~` over the
/// even `L~ <= L` with `L~ >= min_size`; the slopes `c(L)` are then
/// extrapolated linearly in `1 / L`.
pub fn prefactor_extraction(entropies: &[(usize, f64)], sizes: &[usize], min_size: usize) -> Result<PrefactorFit> {
    if sizes.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "prefactor extrapolation needs 3 sizes, got {}",
            sizes.len()
        )));
    }
    let mut per_size = Vec::with_capacity(sizes.len());
    for &l in sizes {
        let (x, y): (Vec<f64>, Vec<f64>) = entropies
            .iter()
            .filter(|(lt, _)| *lt % 2 == 0 && *lt >= min_size.max(2) && *lt <= l)
            .map(|&(lt, s)| ((lt as f64).ln(), s / lt as f64))
            .unzip();
        let fit = fit_line(&x, &y)
            .map_err(|e| Error::InsufficientData(format!("prefactor fit at L = {l}: {e}")))?;
        per_size.push((l, fit.slope, fit.intercept));
    }
    let inv: Vec<f64> = per_size.iter().map(|(l, _, _)| 1.0 / *l as f64).collect();
    let cs: Vec<f64> = per_size.iter().map(|(_, c, _)| *c).collect();
    let ext = fit_line(&inv, &cs)?;
    Ok(PrefactorFit {
        per_size,
        c_inf: ext.intercept,
        c_inf_error: ext.intercept_error,
        slope: ext.slope,
    })
}
