//! Deterministic per-purpose random streams.
//!
//! All randomness in a run flows through streams derived from a seed plus a
//! (purpose, index) key: node placement, mobility, each agent's exploration
//! draws, and each agent's weight initialization get their own stream.
//! Distinct purposes never share a stream, so adding one more relay or
//! reordering evaluation cannot perturb anybody else's draws.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in s.as_bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derive a sub-seed keyed by `(purpose, index)` from a parent seed.
pub fn derive_seed(seed: u64, purpose: &str, index: u64) -> u64 {
    let mut z = splitmix64(seed ^ fnv1a(purpose));
    z = splitmix64(z ^ index);
    splitmix64(z)
}

/// Derive an independent random stream keyed by `(purpose, index)`.
pub fn derive_stream(seed: u64, purpose: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, purpose, index))
}
