//! Random-number policy.
//!
//! Every path draws from its own ChaCha8 stream: the key is derived from the
//! master seed and the stream number is the path id. ChaCha is counter based,
//! so the stream of path `k` is independent of how many other paths exist or
//! in which order they run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for one path.
pub fn path_rng(master_seed: u64, path_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path_id);
    rng
}

/// Seed for a named sub-experiment, so experiments sharing a master seed
/// draw from unrelated streams.
pub fn derive_seed(master_seed: u64, label: &str) -> u64 {
    use std::hash::Hasher;
    let mut h = fnv::FnvHasher::default();
    h.write(label.as_bytes());
    splitmix64(master_seed ^ h.finish())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
