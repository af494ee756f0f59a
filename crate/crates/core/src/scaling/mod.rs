//! Fixed-point entanglement laws, the special functions they need, and
//! fits of simulated curves to them.

mod fit;
mod laws;
mod special;

pub use fit::{fit_scaling_law, prefactor_extraction, PrefactorFit, ScalingLaw, ScalingLawFit, LAMBDA_GRID};
pub use laws::{fermi_liquid_density, lifshitz_density, lifshitz_j, page_law_density};
pub use special::{dedekind_eta, digamma, jacobi_theta3};
