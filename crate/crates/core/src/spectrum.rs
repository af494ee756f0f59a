//! The entanglement Hamiltonian `H_A = sum_a e_a c~_a^dag c~_a` of a
//! subsystem, obtained from the correlation matrix through
//! `l_a = 1 / (exp(e_a) + 1)`.

use std::io::Write;

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::observables::{von_neumann_entropy, CorrelationMatrix};

/// Occupations closer than this to 0 or 1 give numerically meaningless
/// energies and are flagged as saturated.
pub const SATURATION_CLAMP: f64 = 1e-12;

/// Energy assigned to saturated levels, `ln[(1 - d) / d]` for
/// `d = SATURATION_CLAMP`.
pub fn saturation_energy() -> f64 {
    ((1.0 - SATURATION_CLAMP) / SATURATION_CLAMP).ln()
}

/// `e = ln[(1 - l) / l]`.
pub fn energy_from_occupation(l: f64) -> f64 {
    (-l).ln_1p() - l.ln()
}

/// `l = 1 / (exp(e) + 1)`.
pub fn occupation_from_energy(e: f64) -> f64 {
    if e > 0.0 {
        let x = (-e).exp();
        x / (1.0 + x)
    } else {
        1.0 / (e.exp() + 1.0)
    }
}

/// Provenance of one spectrum.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpectrumMeta {
    pub trajectory: u64,
    pub sample: usize,
    pub time: f64,
    pub gamma: f64,
    pub dim: usize,
    pub size: usize,
    pub geometry: String,
}

/// Sorted entanglement energies with optional eigenvectors.
#[derive(Debug, Clone)]
pub struct EntanglementSpectrum {
    energies: Vec<f64>,
    occupations: Vec<f64>,
    saturated: Vec<bool>,
    /// Column `a` is the eigenmode of `energies[a]` on the subsystem sites.
    vectors: Option<Mat<c64>>,
    pub meta: SpectrumMeta,
}

impl EntanglementSpectrum {
    /// Spectrum from bare energies, e.g. synthetic random-matrix levels.
    /// No level is saturated.
    pub fn from_energies(mut energies: Vec<f64>) -> Self {
        energies.sort_by(f64::total_cmp);
        let occupations = energies.iter().map(|&e| occupation_from_energy(e)).collect();
        let saturated = vec![false; energies.len()];
        EntanglementSpectrum {
            energies,
            occupations,
            saturated,
            vectors: None,
            meta: SpectrumMeta::default(),
        }
    }

    /// Rebuilds a persisted spectrum. Energies must be ascending.
    pub fn from_levels(energies: Vec<f64>, saturated: Vec<bool>) -> Result<Self> {
        if energies.len() != saturated.len() {
            return Err(Error::param("saturated", "one flag per level required"));
        }
        if energies.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::param("energies", "must be sorted ascending"));
        }
        let mut s = Self::from_energies(energies);
        s.saturated = saturated;
        Ok(s)
    }

    /// Spectrum with explicit eigenvectors; energies must be ascending and
    /// match the columns of `vectors`.
    pub fn with_vectors(energies: Vec<f64>, vectors: Mat<c64>) -> Result<Self> {
        if vectors.ncols() != energies.len() {
            return Err(Error::param("vectors", "one column per level required"));
        }
        if energies.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::param("energies", "must be sorted ascending"));
        }
        let mut s = Self::from_energies(energies);
        s.vectors = Some(vectors);
        Ok(s)
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn occupations(&self) -> &[f64] {
        &self.occupations
    }

    pub fn saturated(&self) -> &[bool] {
        &self.saturated
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn saturated_count(&self) -> usize {
        self.saturated.iter().filter(|&&s| s).count()
    }

    /// Energies of unsaturated levels, ascending.
    pub fn usable_energies(&self) -> Vec<f64> {
        self.energies
            .iter()
            .zip(&self.saturated)
            .filter(|(_, &s)| !s)
            .map(|(&e, _)| e)
            .collect()
    }

    pub fn vectors(&self) -> Option<&Mat<c64>> {
        self.vectors.as_ref()
    }

    pub fn drop_vectors(&mut self) {
        self.vectors = None;
    }

    /// `|psi_a(i)|^2` for every level, one `Vec` per level.
    pub fn densities(&self) -> Option<Vec<Vec<f64>>> {
        let v = self.vectors.as_ref()?;
        Some(
            (0..v.ncols())
                .map(|a| v.col_as_slice(a).iter().map(|z| z.norm_sqr()).collect())
                .collect(),
        )
    }

    /// Von Neumann entropy from the occupations.
    pub fn entropy(&self) -> f64 {
        von_neumann_entropy(&self.occupations)
    }

    /// Adds `shift` to every energy; used to check shift invariance.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut s = self.clone();
        for e in s.energies.iter_mut() {
            *e += shift;
        }
        s
    }
}

/// Diagonalizes `G` and converts occupations to entanglement energies.
pub fn entanglement_hamiltonian(g: &CorrelationMatrix, keep_vectors: bool) -> Result<EntanglementSpectrum> {
    let (occ_asc, vecs_asc) = if keep_vectors {
        let (ev, u) = g.eigen()?;
        (ev, Some(u))
    } else {
        (g.occupations()?, None)
    };
    let m = occ_asc.len();
    let e_max = saturation_energy();
    // Ascending occupation is descending energy; walk it backwards.
    let mut energies = Vec::with_capacity(m);
    let mut occupations = Vec::with_capacity(m);
    let mut saturated = Vec::with_capacity(m);
    for &l in occ_asc.iter().rev() {
        let (e, sat) = if l <= SATURATION_CLAMP {
            (e_max, true)
        } else if l >= 1.0 - SATURATION_CLAMP {
            (-e_max, true)
        } else {
            (energy_from_occupation(l), false)
        };
        energies.push(e);
        occupations.push(l);
        saturated.push(sat);
    }
    let vectors = vecs_asc.map(|u| {
        let n = u.nrows();
        Mat::<c64>::from_fn(n, m, |i, a| u[(i, m - 1 - a)])
    });
    Ok(EntanglementSpectrum {
        energies,
        occupations,
        saturated,
        vectors,
        meta: SpectrumMeta::default(),
    })
}

/// Uniform histogram bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binning {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Default for Binning {
    fn default() -> Self {
        Binning {
            lo: -15.0,
            hi: 15.0,
            bins: 201,
        }
    }
}

impl Binning {
    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 || !(self.hi > self.lo) {
            return Err(Error::param("binning", "need bins > 0 and hi > lo"));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn index(&self, x: f64) -> Option<usize> {
        if x < self.lo || x >= self.hi {
            return None;
        }
        Some((((x - self.lo) / self.width()) as usize).min(self.bins - 1))
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.bins)
            .map(|k| self.lo + (k as f64 + 0.5) * self.width())
            .collect()
    }
}

/// Pooled, normalized density of entanglement energies.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOfStates {
    pub binning: Binning,
    /// Integrates to one over the binned range.
    pub density: Vec<f64>,
    pub in_range: usize,
    pub below: usize,
    pub above: usize,
    pub saturated_low: usize,
    pub saturated_high: usize,
}

impl DensityOfStates {
    pub fn write_csv<W: Write>(&self, mut out: W, header: &[(String, String)]) -> std::io::Result<()> {
        for (k, v) in header {
            writeln!(out, "# {k} = {v}")?;
        }
        writeln!(
            out,
            "# in_range = {}\n# below = {}\n# above = {}\n# saturated_low = {}\n# saturated_high = {}",
            self.in_range, self.below, self.above, self.saturated_low, self.saturated_high
        )?;
        writeln!(out, "energy,density")?;
        for (c, d) in self.binning.centers().iter().zip(&self.density) {
            writeln!(out, "{c:.6},{d:.8e}")?;
        }
        Ok(())
    }
}

pub fn density_of_states<'a, I>(spectra: I, binning: Binning) -> Result<DensityOfStates>
where
    I: IntoIterator<Item = &'a EntanglementSpectrum>,
{
    binning.validate()?;
    let mut counts = vec![0usize; binning.bins];
    let (mut below, mut above, mut sat_lo, mut sat_hi, mut seen) = (0, 0, 0, 0, 0);
    for s in spectra {
        seen += 1;
        for (&e, &sat) in s.energies().iter().zip(s.saturated()) {
            if sat {
                if e < 0.0 {
                    sat_lo += 1;
                } else {
                    sat_hi += 1;
                }
                continue;
            }
            match binning.index(e) {
                Some(k) => counts[k] += 1,
                None if e < binning.lo => below += 1,
                None => above += 1,
            }
        }
    }
    if seen == 0 {
        return Err(Error::InsufficientData("density of states of an empty ensemble".into()));
    }
    let in_range: usize = counts.iter().sum();
    let norm = if in_range > 0 {
        1.0 / (in_range as f64 * binning.width())
    } else {
        0.0
    };
    Ok(DensityOfStates {
        binning,
        density: counts.iter().map(|&c| c as f64 * norm).collect(),
        in_range,
        below,
        above,
        saturated_low: sat_lo,
        saturated_high: sat_hi,
    })
}
