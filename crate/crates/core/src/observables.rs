//! Correlation matrices, von Neumann entropies and mutual information of
//! Gaussian states.

use std::fmt;
use std::io::Write;

use faer::{c64, Mat, Side};

use crate::error::{Error, Result};
use crate::lattice::{Geometry, Lattice, SubsystemMask};
use crate::stats::Accumulator;
use crate::trajectory::TrajectoryState;

/// Eigenvalues of a correlation matrix may leave `[0, 1]` by this much
/// before the state is considered broken.
pub const EIGENVALUE_CLAMP_TOL: f64 = 1e-10;

/// `G_{lm} = <c_l^dag c_m>` restricted to a subsystem.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    matrix: Mat<c64>,
}

impl CorrelationMatrix {
    /// `(psi psi^dag)|_A`, symmetrized.
    pub fn new(state: &TrajectoryState, mask: &SubsystemMask) -> Result<Self> {
        if mask.is_empty() {
            return Err(Error::InvalidMask("empty subsystem".into()));
        }
        let psi = state.orbitals();
        if mask.sites().last().is_some_and(|&s| s >= psi.nrows()) {
            return Err(Error::InvalidMask("mask does not fit the state".into()));
        }
        let sites = mask.sites();
        let rows = Mat::<c64>::from_fn(sites.len(), psi.ncols(), |i, j| psi[(sites[i], j)]);
        let g = &rows * rows.adjoint();
        Ok(Self::hermitize(g))
    }

    /// Wraps an explicit matrix, symmetrizing it.
    pub fn from_matrix(matrix: Mat<c64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::param("matrix", "must be square and non-empty"));
        }
        Ok(Self::hermitize(matrix))
    }

    fn hermitize(g: Mat<c64>) -> Self {
        let n = g.nrows();
        let matrix = Mat::<c64>::from_fn(n, n, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5);
        CorrelationMatrix { matrix }
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Expected particle number in the subsystem.
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// Clamped eigenvalues in ascending order.
    pub fn occupations(&self) -> Result<Vec<f64>> {
        let ev = self
            .matrix
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        clamp_occupations(ev)
    }

    /// Clamped eigenvalues (ascending) with their eigenvectors as columns.
    pub fn eigen(&self) -> Result<(Vec<f64>, Mat<c64>)> {
        let eig = self
            .matrix
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let s = eig.S().column_vector();
        let ev = clamp_occupations((0..self.dim()).map(|i| s[i].re).collect())?;
        Ok((ev, eig.U().to_owned()))
    }

    pub fn entropy(&self) -> Result<f64> {
        Ok(von_neumann_entropy(&self.occupations()?))
    }
}

fn clamp_occupations(mut ev: Vec<f64>) -> Result<Vec<f64>> {
    for x in ev.iter_mut() {
        if !(*x >= -EIGENVALUE_CLAMP_TOL && *x <= 1.0 + EIGENVALUE_CLAMP_TOL) {
            return Err(Error::BrokenCorrelation { value: *x });
        }
        *x = x.clamp(0.0, 1.0);
    }
    Ok(ev)
}

/// Binary entropy `-x ln x - (1-x) ln(1-x)` with `0 ln 0 = 0`.
pub fn mode_entropy(x: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    term(x) + term(1.0 - x)
}

/// `S = -sum_a [l_a ln l_a + (1 - l_a) ln(1 - l_a)]` (natural log).
pub fn von_neumann_entropy(occupations: &[f64]) -> f64 {
    occupations.iter().map(|&x| mode_entropy(x)).sum()
}

/// Entanglement entropy of `mask` in `state`.
pub fn entanglement_entropy(state: &TrajectoryState, mask: &SubsystemMask) -> Result<f64> {
    CorrelationMatrix::new(state, mask)?.entropy()
}

/// `I(A, B) = S_A + S_B - S_{A u B}` for disjoint `A`, `B`.
pub fn mutual_information(
    lattice: &Lattice,
    state: &TrajectoryState,
    a: &SubsystemMask,
    b: &SubsystemMask,
) -> Result<f64> {
    if !a.is_disjoint(b) {
        return Err(Error::InvalidMask("mutual information needs disjoint subsystems".into()));
    }
    let ab = a.union(lattice, b)?;
    Ok(entanglement_entropy(state, a)? + entanglement_entropy(state, b)? - entanglement_entropy(state, &ab)?)
}

/// What the abscissa of an [`ObservableSeries`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Abscissa {
    SubsystemWidth,
    Time,
    Gamma,
    Size,
}

impl Abscissa {
    pub fn tag(&self) -> &'static str {
        match self {
            Abscissa::SubsystemWidth => "ell_A",
            Abscissa::Time => "t",
            Abscissa::Gamma => "gamma",
            Abscissa::Size => "L",
        }
    }
}

impl fmt::Display for Abscissa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub x: f64,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Averaged observable against one abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub abscissa: Abscissa,
    pub points: Vec<SeriesPoint>,
}

impl ObservableSeries {
    pub fn new(abscissa: Abscissa) -> Self {
        ObservableSeries {
            abscissa,
            points: Vec::new(),
        }
    }

    pub fn push(&mut self, x: f64, acc: &Accumulator) {
        self.points.push(SeriesPoint {
            x,
            mean: acc.mean(),
            stderr: acc.stderr(),
            count: acc.count(),
        });
    }

    pub fn get(&self, x: f64) -> Option<&SeriesPoint> {
        self.points.iter().find(|p| (p.x - x).abs() < 1e-12)
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean).collect()
    }

    /// CSV with a `#`-prefixed header block of `key = value` lines followed
    /// by the columns `x, mean, stderr, n_samples`.
    pub fn write_csv<W: Write>(&self, mut out: W, header: &[(String, String)]) -> std::io::Result<()> {
        for (k, v) in header {
            writeln!(out, "# {k} = {v}")?;
        }
        writeln!(out, "{},mean,stderr,n_samples", self.abscissa.tag())?;
        for p in &self.points {
            writeln!(out, "{},{:.12e},{:.6e},{}", p.x, p.mean, p.stderr, p.count)?;
        }
        Ok(())
    }
}

/// Strip entanglement density `s(l_A) = <S_A> / L` for every width in
/// `widths`, averaged over all `states`. With `offset` the value at
/// `l_A = L/2` is subtracted from every point.
pub fn entanglement_density_curve<'a, I>(
    lattice: &Lattice,
    states: I,
    widths: &[usize],
    offset: bool,
) -> Result<ObservableSeries>
where
    I: IntoIterator<Item = &'a TrajectoryState>,
{
    let l = lattice.size();
    let masks = widths
        .iter()
        .map(|&w| SubsystemMask::new(lattice, Geometry::strip(w)))
        .collect::<Result<Vec<_>>>()?;
    let mut accs = vec![Accumulator::new(); widths.len()];
    for state in states {
        for (mask, acc) in masks.iter().zip(accs.iter_mut()) {
            acc.push(entanglement_entropy(state, mask)?);
        }
    }
    density_series_from_entropies(l, widths, &accs, offset)
}

/// Builds the `S / L` series from per-width entropy accumulators.
pub fn density_series_from_entropies(
    l: usize,
    widths: &[usize],
    accs: &[Accumulator],
    offset: bool,
) -> Result<ObservableSeries> {
    let lf = l as f64;
    let shift = if offset {
        let k = widths
            .iter()
            .position(|&w| w == l / 2)
            .ok_or_else(|| Error::param("widths", "offset mode needs l_A = L/2"))?;
        accs[k].mean() / lf
    } else {
        0.0
    };
    let mut series = ObservableSeries::new(Abscissa::SubsystemWidth);
    for (&w, acc) in widths.iter().zip(accs) {
        series.points.push(SeriesPoint {
            x: w as f64,
            mean: acc.mean() / lf - shift,
            stderr: acc.stderr() / lf,
            count: acc.count(),
        });
    }
    Ok(series)
}
