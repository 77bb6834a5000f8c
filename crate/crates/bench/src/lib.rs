//! Fixtures shared by the kernel benchmarks.

use fracwave_core::dynamics::{initial_data, PairState};
use fracwave_core::sampling::InitialDataConvention;
use fracwave_core::{sample_mu, Lattice, Preset, RenormTable, SeededStream, SpectralField};

pub const ALPHA: f64 = 0.9;

/// Sampling lattice at cutoff `n`.
pub fn lattice(n: usize) -> Lattice {
    Lattice::new(n, 2 * n + 1, ALPHA).expect("valid cutoff")
}

pub fn table(preset: Preset, n: usize) -> RenormTable {
    RenormTable::new(&preset.spec(ALPHA), ALPHA, n).expect("valid table")
}

pub fn field(n: usize, seed: u64) -> SpectralField {
    sample_mu(&lattice(n), SeededStream::new(seed, 0))
}

pub fn state(n: usize, seed: u64) -> PairState {
    initial_data(&lattice(n), SeededStream::new(seed, 0), InitialDataConvention::TwoAlpha)
}
