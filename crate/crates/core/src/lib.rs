//! Numerical laboratory for Wick-renormalised fractional wave equations and
//! their Gibbs measures on the 2-torus.
//!
//! Fields are band-limited trigonometric polynomials handled through
//! [`SpectralField`]; scalar renormalisation constants live in
//! [`RenormTable`]. The modules follow the pipeline: sampling of the base
//! Gaussian measures, Gibbs-weight estimators, the variational bound, and
//! the truncated and limiting dynamics.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod gibbs;
pub mod renorm;
pub mod sampling;
pub mod spectral;
pub mod stats;
pub mod variational;

pub use error::{Error, Result};
pub use renorm::{PotentialSpec, Preset, RenormTable, ValidationReport};
pub use sampling::{sample_mu, sample_white, wick_power, SeededStream};
pub use spectral::{Exactness, Lattice, Multiplier, SpectralField};
pub use stats::McEstimate;
