//! Random-matrix diagnostics of entanglement spectra.

mod kl;
mod ratios;
mod sff;
mod synthetic;
mod unfold;

pub use kl::{kl1, kl2, kl_pair, DENSITY_FLOOR};
pub use ratios::{
    gap_ratios, gue_r_density, mean_gap_ratio, poisson_r_density, r_distribution, GapRatios, RHistogram,
    DEGENERATE_SPACING, MEAN_R_GUE, MEAN_R_POISSON,
};
pub use sff::{
    gue_form_factor, log_grid, spectral_form_factor, thouless_time, SffCurve, ThoulessTime, DEFAULT_ETA,
    THOULESS_TOL,
};
pub use synthetic::{gue_spectrum, poisson_spectrum, synthetic_ensemble, SyntheticKind};
pub use unfold::{bulk_mean_spacing, unfold, Unfolding};

use crate::error::{Error, Result};
use crate::spectrum::EntanglementSpectrum;
use crate::stats::{Accumulator, Estimate};

/// Spectra sharing one `(d, L, gamma, geometry)` point.
#[derive(Debug, Clone, Default)]
pub struct SpectralEnsemble {
    spectra: Vec<EntanglementSpectrum>,
}

impl SpectralEnsemble {
    pub fn new(spectra: Vec<EntanglementSpectrum>) -> Result<Self> {
        if let Some(first) = spectra.first() {
            let m = &first.meta;
            let same = spectra.iter().all(|s| {
                s.meta.dim == m.dim
                    && s.meta.size == m.size
                    && s.meta.gamma == m.gamma
                    && s.meta.geometry == m.geometry
            });
            if !same {
                return Err(Error::param("ensemble", "members differ in (d, L, gamma, geometry)"));
            }
        }
        Ok(SpectralEnsemble { spectra })
    }

    pub fn spectra(&self) -> &[EntanglementSpectrum] {
        &self.spectra
    }

    pub fn len(&self) -> usize {
        self.spectra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectra.is_empty()
    }

    /// Unsaturated levels of every member.
    pub fn levels(&self) -> Vec<Vec<f64>> {
        self.spectra.iter().map(|s| s.usable_energies()).collect()
    }

    pub fn mean_gap_ratio(&self) -> Result<Estimate> {
        let levels = self.levels();
        mean_gap_ratio(levels.iter().map(|v| v.as_slice()))
    }

    pub fn r_distribution(&self, bins: usize, r_max: f64) -> Result<RHistogram> {
        let levels = self.levels();
        r_distribution(levels.iter().map(|v| v.as_slice()), bins, r_max)
    }

    fn size(&self) -> usize {
        self.spectra.first().map_or(0, |s| s.meta.size)
    }

    /// KL1 averaged over members.
    pub fn kl1(&self) -> Result<Estimate> {
        let mut acc = Accumulator::new();
        for s in &self.spectra {
            let d = s
                .densities()
                .ok_or_else(|| Error::InsufficientData("KL1 needs eigenvectors".into()))?;
            acc.push(kl1(&d, self.size())?);
        }
        if acc.count() == 0 {
            return Err(Error::InsufficientData("KL1 of an empty ensemble".into()));
        }
        Ok(acc.estimate())
    }

    /// KL2 averaged over the pairs `(2k, 2k + 1)` in member order.
    pub fn kl2(&self) -> Result<Estimate> {
        if self.spectra.len() < 2 {
            return Err(Error::InsufficientData("KL2 needs two spectra".into()));
        }
        if self.spectra.len() % 2 == 1 {
            log::warn!("KL2: dropping unpaired spectrum {}", self.spectra.len() - 1);
        }
        let mut acc = Accumulator::new();
        for pair in self.spectra.chunks_exact(2) {
            let missing = || Error::InsufficientData("KL2 needs eigenvectors".into());
            let a = pair[0].densities().ok_or_else(missing)?;
            let b = pair[1].densities().ok_or_else(missing)?;
            acc.push(kl2(&a, &b, self.size())?);
        }
        Ok(acc.estimate())
    }

    pub fn unfolded(&self) -> Result<Vec<Vec<f64>>> {
        unfold(&self.levels())
    }

    pub fn spectral_form_factor(&self, tau: &[f64], eta: f64) -> Result<SffCurve> {
        spectral_form_factor(&self.unfolded()?, tau, eta)
    }
}
