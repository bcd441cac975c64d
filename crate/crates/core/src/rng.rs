//! Deterministic random streams derived from a single experiment seed.
//!
//! Each consumer asks for a stream by name (model, feature set, fold), so
//! adding a consumer never shifts another consumer's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Derives the seed of the stream identified by `path` under `root`.
pub fn derive_seed(root: u64, path: &[&str]) -> u64 {
    path.iter().fold(splitmix64(root), |acc, part| {
        // separator byte keeps ["ab", "c"] and ["a", "bc"] apart
        splitmix64(acc ^ fnv1a(part.as_bytes()) ^ fnv1a(&[0xff]).rotate_left(17))
    })
}

pub fn stream(root: u64, path: &[&str]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, path))
}
