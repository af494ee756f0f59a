//! Monitored free fermions: Gaussian quantum trajectories, entanglement
//! Hamiltonians and the random-matrix and scaling analysis of their spectra.
//!
//! [`trajectory`] evolves Slater determinants under hopping and continuous
//! occupation monitoring, [`observables`] and [`spectrum`] turn a state into
//! entropies and entanglement energies, [`rmt`] and [`scaling`] analyse
//! ensembles of those, [`collapse`] extracts `(gamma_c, nu)`, and
//! [`orchestrator`] runs it all from configuration files.

pub mod collapse;
pub mod error;
pub mod lattice;
pub mod numerics;
pub mod observables;
pub mod orchestrator;
pub mod rmt;
pub mod scaling;
pub mod spectrum;
pub mod stats;
pub mod trajectory;

pub use error::{Error, Result};
