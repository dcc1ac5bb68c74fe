//! Stable seed derivation.
//!
//! Every random stream in the simulator is derived from a single root seed by
//! hashing a component name and an index, so results do not depend on
//! scheduling order or platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `root`, a component name and an index.
pub fn derive(root: u64, component: &str, index: u64) -> u64 {
    let mut h = FNV_OFFSET;
    for b in component.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(splitmix64(root ^ h).wrapping_add(index))
}

/// Derives a child seed keyed by several string parts (e.g. scene id and source name).
pub fn derive_keyed(root: u64, parts: &[&str], index: u64) -> u64 {
    let mut acc = root;
    for p in parts {
        acc = derive(acc, p, 0);
    }
    derive(acc, "", index)
}

pub fn rng(root: u64, component: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, component, index))
}
