//! Seed derivation for reproducible, independent RNG streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every seeded computation in the crate.
pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed for stream `stream` of purpose `tag` from a root seed.
/// Distinct (tag, stream) pairs give unrelated seeds, so per-read offsets
/// (`seed + read_index`) of different pipelines do not collide in practice.
pub fn derive(root: u64, tag: u64, stream: u64) -> u64 {
    mix(mix(mix(root) ^ tag.rotate_left(17)) ^ stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn derive_is_deterministic_and_spread() {
        assert_eq!(derive(7, 1, 2), derive(7, 1, 2));
        assert_ne!(derive(7, 1, 2), derive(7, 1, 3));
        assert_ne!(derive(7, 1, 2), derive(7, 2, 2));
        assert_ne!(derive(7, 1, 2), derive(8, 1, 2));
    }

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<u32> = (0..8)
            .map({
                let mut r = rng_from_seed(42);
                move |_| r.gen()
            })
            .collect();
        let b: Vec<u32> = (0..8)
            .map({
                let mut r = rng_from_seed(42);
                move |_| r.gen()
            })
            .collect();
        assert_eq!(a, b);
    }
}
