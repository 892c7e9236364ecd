//! Deterministic stream-split random number generation.
//!
//! Every stochastic operation draws from a ChaCha stream derived from a root
//! seed, a domain tag, and a stream index. Streams are independent, so
//! per-sample work can run in parallel and still reproduce the serial result
//! bit for bit.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; used only to mix seed material.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn domain_hash(domain: &str) -> u64 {
    // FNV-1a, stable across platforms.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in domain.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives the RNG for stream `index` of `domain` under `seed`.
///
/// The stream key is `splitmix64(splitmix64(splitmix64(seed) ^ fnv(domain)) ^ index)`,
/// so distinct (seed, domain, index) triples get uncorrelated ChaCha streams.
pub fn stream(seed: u64, domain: &str, index: u64) -> ChaCha8Rng {
    let mut key = splitmix64(seed);
    key = splitmix64(key ^ domain_hash(domain));
    key = splitmix64(key ^ index);
    ChaCha8Rng::seed_from_u64(key)
}
