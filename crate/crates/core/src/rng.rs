//! Counter-based random streams keyed by `(seed, stream_id)`.
//!
//! Each stream is a ChaCha8 keystream whose key comes from `seed` and whose
//! 64-bit stream selector is `stream_id`, so replication `r` never depends on
//! how many draws replication `r - 1` consumed.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A stream for a different purpose (noise vs covariates vs shuffling)
    /// under the same `(seed, stream_id)` pair.
    pub fn derive(self, tag: u64) -> Self {
        Self { seed: splitmix64(self.seed ^ splitmix64(tag)), stream_id: self.stream_id }
    }

    pub fn generator(self) -> StreamRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(self.stream_id);
        StreamRng { inner }
    }
}

/// Draw source for one stream.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Fair coin.
    pub fn coin(&mut self) -> bool {
        self.inner.next_u64() >> 63 == 1
    }

    /// Uniform index in `0..n` (Lemire multiply-shift; bias below 2^-64 * n).
    pub fn index(&mut self, n: usize) -> usize {
        ((self.inner.next_u64() as u128 * n as u128) >> 64) as usize
    }
}
