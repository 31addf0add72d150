//! Deterministic random substreams.
//!
//! A substream is a `ChaCha8Rng` seeded from a master seed and a path of
//! integer keys, e.g. `(seed, replication, job)`. Keys are folded with the
//! SplitMix64 finalizer, so every distinct path yields an unrelated stream
//! regardless of the order in which streams are created.

use rand::rngs::SmallRng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed derived from `master` and a key path.
pub fn derive_seed(master: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(splitmix64(master), |acc, &k| splitmix64(acc.rotate_left(23) ^ splitmix64(k)))
}

pub fn substream(master: u64, keys: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, keys))
}

/// Cheap stream for the simulator's innermost loop, one per
/// (seed, replication, job key). Reproducible for a fixed `rand` release.
pub fn job_stream(master: u64, replication: u64, job_key: u64) -> SmallRng {
    SmallRng::seed_from_u64(derive_seed(master, &[replication, job_key]))
}

/// Stable 64-bit key for a string label (FNV-1a).
pub fn label_key(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}
