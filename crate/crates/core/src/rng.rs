//! Seeds and stream derivation.
//!
//! Every random quantity in a run is derived from a [`SeedSpec`] and a
//! [`Purpose`]. Sequential consumers (event clocks, samplers) get their own
//! ChaCha8 stream. Quantities attached to lattice sites (initial counts,
//! instruction tapes) are produced by a counter-based hash of
//! `(stream key, site, index)`, so their values do not depend on the order in
//! which they are requested.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Consumers of randomness within a single run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    InitialConfig,
    Tape,
    Clock,
    Order,
    Recursion,
    Flow,
    Sampler,
    Campaign,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::InitialConfig => 0x11,
            Purpose::Tape => 0x22,
            Purpose::Clock => 0x33,
            Purpose::Order => 0x44,
            Purpose::Recursion => 0x55,
            Purpose::Flow => 0x66,
            Purpose::Sampler => 0x77,
            Purpose::Campaign => 0x88,
        }
    }
}

/// SplitMix64 finalizer; a bijection on `u64` with full avalanche.
#[inline]
pub const fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based draw for `(key, a, b)`.
#[inline]
pub fn hash3(key: u64, a: u64, b: u64) -> u64 {
    mix64(key ^ mix64(a.wrapping_add(GOLDEN) ^ mix64(b ^ 0xD6E8_FEB8_6659_FD93)))
}

/// Stable key of a lattice site, independent of any window.
#[inline]
pub fn site_key(coords: &[i64]) -> u64 {
    match coords {
        [x] => *x as u64,
        _ => coords
            .iter()
            .fold(0x5851_F42D_4C95_7F2D, |acc, &c| mix64(acc ^ c as u64)),
    }
}

/// Maps 53 high bits of `u` to a double in `[0, 1)`.
#[inline]
pub fn unit_f64(u: u64) -> f64 {
    (u >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Master seed and run index of one simulation run.
///
/// Identical `(master_seed, run_index)` pairs yield identical output no matter
/// how many runs execute concurrently, since nothing is drawn from shared state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub run_index: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64, run_index: u64) -> Self {
        Self {
            master_seed,
            run_index,
        }
    }

    /// Stream key for one purpose of this run.
    pub fn key(&self, purpose: Purpose) -> u64 {
        mix64(mix64(mix64(self.master_seed ^ GOLDEN) ^ self.run_index) ^ purpose.tag())
    }

    /// Sequential generator for one purpose of this run.
    pub fn rng(&self, purpose: Purpose) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key(purpose))
    }

    /// A seed for a sub-run, e.g. run `r` at grid point `g` of a campaign.
    pub fn child(&self, group: u64, run: u64) -> SeedSpec {
        SeedSpec {
            master_seed: hash3(self.key(Purpose::Campaign), group, self.run_index),
            run_index: run,
        }
    }
}
