//! Named, index-addressable random sub-streams derived from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator type used everywhere in the pipeline.
pub type PipelineRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed of item `index` in the named `stream`.
///
/// The result depends only on its three arguments, so item `i` gets the same
/// generator no matter how many workers run or in which order items are
/// processed.
pub fn derive_seed(master_seed: u64, stream: &str, index: u64) -> u64 {
    let mut h = FNV_OFFSET;
    for b in stream.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    let a = splitmix64(master_seed ^ h);
    splitmix64(a ^ splitmix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

pub fn rng_from_seed(seed: u64) -> PipelineRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(master_seed: u64, stream: &str, index: u64) -> PipelineRng {
    rng_from_seed(derive_seed(master_seed, stream, index))
}
