//! Seeded random streams.
//!
//! Every experiment is driven by one 64-bit seed. Independent consumers draw
//! from separate ChaCha8 streams (same key, different stream id), so adding a
//! user or a Monte Carlo chunk never perturbs the numbers another consumer
//! sees. ChaCha8 is counter-based and its output is fixed across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Who is consuming a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    /// Channel-state sequence.
    States,
    /// Additive noise seen by receiver `k`.
    Noise(usize),
    /// Messages drawn by transmitter `k`.
    Messages(usize),
    /// Shared codebook generators.
    Codebook,
    /// Monte Carlo chunk `i`.
    MonteCarlo(u64),
    /// Independent repetitions of an experiment.
    Trial(u64),
}

impl Stream {
    fn id(self) -> u64 {
        let (tag, index): (u64, u64) = match self {
            Stream::States => (1, 0),
            Stream::Noise(k) => (2, k as u64),
            Stream::Messages(k) => (3, k as u64),
            Stream::Codebook => (4, 0),
            Stream::MonteCarlo(i) => (5, i),
            Stream::Trial(i) => (6, i),
        };
        (tag << 56) | (index & ((1 << 56) - 1))
    }
}

/// A root seed from which named streams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSequence {
    seed: u64,
}

impl SeedSequence {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(self) -> u64 {
        self.seed
    }

    pub fn stream(self, stream: Stream) -> Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream.id());
        rng
    }

    /// A child sequence for repetition `i`, whose streams are disjoint from
    /// the parent's because the key differs.
    pub fn child(self, i: u64) -> SeedSequence {
        let mut rng = self.stream(Stream::Trial(i));
        SeedSequence {
            seed: rand::RngCore::next_u64(&mut rng),
        }
    }
}
