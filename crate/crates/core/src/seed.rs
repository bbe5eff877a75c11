//! Deterministic child-seed derivation.
//!
//! Child seeds are a fixed function of `(master, stage, index)`, so adding a
//! stage never shifts the random streams of the others. The mixing uses
//! FNV-1a over the stage name and the SplitMix64 finalizer, both of which are
//! stable across platforms and compiler versions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `index`-th unit of work in `stage`, derived from `master`.
pub fn derive_seed(master: u64, stage: &str, index: u64) -> u64 {
    let h = splitmix64(master ^ fnv1a(stage.as_bytes()));
    splitmix64(h ^ splitmix64(index))
}

pub fn rng_for(master: u64, stage: &str, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(master, stage, index))
}
