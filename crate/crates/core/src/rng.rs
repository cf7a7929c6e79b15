//! Reproducible random streams.
//!
//! Every stochastic step draws from a ChaCha8 generator keyed by a 64-bit
//! seed and a `(level, replicate)` stream id. Distinct ids select distinct
//! ChaCha streams of the same key, so cells of the pipeline lattice can be
//! evaluated in any order and still produce identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub level: u32,
    pub replicate: u32,
}

impl RngStream {
    pub fn new(seed: u64, level: u32, replicate: u32) -> Self {
        RngStream {
            seed,
            level,
            replicate,
        }
    }

    /// Stream `(0, 0)` of `seed`.
    pub fn root(seed: u64) -> Self {
        Self::new(seed, 0, 0)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((u64::from(self.level) << 32) | u64::from(self.replicate));
        rng
    }
}

/// Derive an independent seed for a named purpose from a master seed.
pub fn derive_seed(master: u64, purpose: &str) -> u64 {
    // FNV-1a over the purpose tag, then a SplitMix64 finaliser.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in purpose.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(master ^ h)
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
