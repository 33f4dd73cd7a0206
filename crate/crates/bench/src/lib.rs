//! Fixtures shared by the kernel benchmarks.

use eia_core::{ff_states, gauss_states, ChannelState, PrimeField, Result, SeedSequence};

/// `n` finite-field states for `q`, `k`.
pub fn ff_fixture(q: u32, k: usize, n: usize, seed: u64) -> Result<Vec<ChannelState>> {
    ff_states(SeedSequence::new(seed), PrimeField::odd(q)?, k, n)
}

/// `n` Rayleigh states for `k` users.
pub fn gauss_fixture(k: usize, n: usize, seed: u64) -> Result<Vec<ChannelState>> {
    gauss_states(SeedSequence::new(seed), k, n)
}
