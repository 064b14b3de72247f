//! Seed derivation for reproducible ensembles.
//!
//! Every stochastic job (a Louvain restart, a rewired network, an installation
//! replicate) gets its own generator whose seed is a pure function of the
//! master seed, a stream label and the job index. Results therefore do not
//! depend on which thread runs which job.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate. ChaCha8 output is stable across
/// platforms and crate versions, unlike `StdRng`.
pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed of job `index` in stream `stream` from `master`.
pub fn derive(master: u64, stream: &str, index: u64) -> u64 {
    // FNV-1a over the label; only needs to separate streams, not resist attack.
    let mut label = 0xcbf2_9ce4_8422_2325u64;
    for b in stream.bytes() {
        label ^= u64::from(b);
        label = label.wrapping_mul(0x0000_0100_0000_01B3);
    }
    splitmix64(splitmix64(master ^ label) ^ splitmix64(index.wrapping_add(1)))
}
