//! Seeded random streams. Every source of randomness in the crate derives
//! from a single user seed through a named sub-stream, so individual stages
//! reproduce independently of one another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A reproducible generator for the given seed and stream name.
pub fn substream(seed: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ fnv1a(name.as_bytes())))
}

/// Deterministic without-replacement subsample of `cap` indices out of `n`,
/// returned sorted. Identical for every call with the same `(seed, n, cap)`,
/// so results do not depend on evaluation order.
pub fn subsample_indices(n: usize, cap: usize, seed: u64) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    let mut rng = substream(seed ^ splitmix(n as u64), "subsample");
    let mut pool: Vec<usize> = (0..n).collect();
    // partial Fisher-Yates: the first `cap` slots become the sample
    for i in 0..cap {
        let j = i + rand::Rng::gen_range(&mut rng, 0..n - i);
        pool.swap(i, j);
    }
    let mut picked = pool[..cap].to_vec();
    picked.sort_unstable();
    picked
}
