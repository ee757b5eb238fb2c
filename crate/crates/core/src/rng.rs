//! Session random number generator.
//!
//! SplitMix64 (Steele, Lea & Flood, 2014): the state advances by the golden
//! gamma `0x9E3779B97F4A7C15` and each output is mixed with multipliers
//! `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB` and shifts 30/27/31. The
//! stream is fully determined by the seed on every platform, which is what
//! trace replay relies on.

use serde::{Deserialize, Serialize};

/// Name recorded in trace headers.
pub const RNG_ALGORITHM: &str = "splitmix64";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRng {
    state: u64,
}

impl SessionRng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `0..n` by rejection, so every value is exactly
    /// equally likely.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n) - 1;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % n;
            }
        }
    }

    /// Derives an independent seed, used to split one seed across
    /// sub-experiments.
    pub fn fork(&mut self) -> SessionRng {
        SessionRng::new(self.next_u64())
    }
}
