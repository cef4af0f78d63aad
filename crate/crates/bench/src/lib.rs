//! Shared fixtures for the pipeline benchmarks.

use dirmod_core::constellation::Constellation;
use dirmod_core::sim_engine::{sample_rayleigh, trial_rng};
use dirmod_core::{ComplexMatrix, SymbolVector};

/// A deterministic channel/symbol pair at the standard benchmark size.
pub fn fixture(k: usize, l: usize, seed: u64) -> (ComplexMatrix, SymbolVector) {
    let mut rng = trial_rng(seed, 0, 0);
    let h_r = sample_rayleigh(k, l, 1.0, &mut rng);
    let constellation = Constellation::new(8).expect("8-PSK");
    let symbols = constellation.sample_symbols(k, &mut rng);
    (h_r, symbols)
}
