//! Deterministic seed derivation. Every Monte Carlo run gets its own ChaCha
//! stream keyed by `(seed, run)`, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for run `run` of an experiment seeded with `seed`.
pub fn stream(seed: u64, run: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Mixes a label into a seed so that unrelated experiments sharing a user
/// seed do not reuse streams.
pub fn child_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, folded into the seed with a splitmix finaliser.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
