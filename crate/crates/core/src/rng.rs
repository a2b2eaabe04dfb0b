//! Reproducible random number streams.
//!
//! Monte Carlo estimators fan samples out across worker threads. To keep
//! results independent of the worker count, every sample owns a private
//! counter-based stream keyed by `(seed, sample index, domain)`: the key is
//! written into the ChaCha block cipher key, so streams never overlap and a
//! sample draws the same variates no matter which thread runs it.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Namespace tag separating stream families that share a user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Bootstrap,
    Kmc,
    Equilibrium,
    Perc,
    Probe,
    Test,
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::Bootstrap => 1,
            Domain::Kmc => 2,
            Domain::Equilibrium => 3,
            Domain::Perc => 4,
            Domain::Probe => 5,
            Domain::Test => 6,
        }
    }
}

/// Stream for one `(seed, index)` pair in the given domain.
pub fn stream_rng(seed: u64, index: u64, domain: Domain) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    key[16..24].copy_from_slice(&domain.tag().to_le_bytes());
    key[24..32].copy_from_slice(&0x9e37_79b9_7f4a_7c15u64.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

/// SplitMix64 finalizer; full-avalanche 64-bit mixer.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stateless per-site word: hash of `(seed, sample, coords)`.
///
/// Lets lazy cluster exploration query site occupancy in any order while
/// staying deterministic; each site reads one fixed word of entropy.
#[inline]
pub fn site_u64(seed: u64, sample: u64, coords: &[i64]) -> u64 {
    let mut h = mix64(seed ^ 0x853c_49e6_748f_ea9b);
    h = mix64(h ^ sample);
    for &c in coords {
        h = mix64(h ^ (c as u64));
    }
    h
}

/// Uniform in `[0, 1)` from a 64-bit word (53-bit mantissa).
#[inline]
pub fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
