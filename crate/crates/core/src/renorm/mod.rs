//! Renormalisation constants and Hermite calculus.

mod constants;
mod hermite;
mod potential;

pub use constants::{
    b1_default, lambda0, lambda0_with, lattice_constant_b1, sigma_constants, sigma_sq,
    sigma_tilde_sq, B1Estimate, RenormTable, SigmaConstants, B1_ORDER, B1_TOL, B1_TRUNCATION,
};
pub use hermite::{hermite, hermite_all, hermite_at_zero, hermite_coeffs};
pub use potential::{
    PotentialSpec, Preset, ValidationReport, BIFURCATION_CONDITION, LEADING_CONDITION,
    POSITIVITY_CONDITION, TOL_BIFURCATION,
};
