//! Reproducible random streams.
//!
//! A stream is a ChaCha8 generator keyed by `seed` and positioned on the
//! ChaCha stream `stream_id`. The ChaCha output is specified bit-for-bit, so
//! an identical `(seed, stream_id)` pair yields the same variates on every
//! platform and under any thread scheduling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer, used to derive child stream keys.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Child stream for replica (or job) `index`. Depends only on
    /// `(seed, stream_id, index)`, never on how many variates the parent has
    /// consumed, so replicas can run in any order.
    pub fn fork(&self, index: u64) -> RngStream {
        let key = splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(0x5CA9_3A1C)));
        RngStream::new(key, index)
    }

    /// Uniform variate in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform index in `[0, bound)` from exactly one 64-bit draw
    /// (multiply-high; bias below `bound / 2^64`).
    #[inline]
    pub fn index(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        ((self.rng.next_u64() as u128 * bound as u128) >> 64) as usize
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}
