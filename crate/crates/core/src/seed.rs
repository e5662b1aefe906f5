//! Counter-based seed derivation.
//!
//! `derive_seed(master, i)` is the SplitMix64 output for counter `i` of a
//! stream keyed by `master`, so per-run seeds are independent of the order in
//! which runs execute.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: u64) -> u64 {
    mix(mix(master).wrapping_add(stream.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Two-level derivation, e.g. `(repetition, step)`.
pub fn derive_seed2(master: u64, a: u64, b: u64) -> u64 {
    derive_seed(derive_seed(master, a), b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn streams_are_distinct_and_stable() {
        let seeds: HashSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(derive_seed(42, 7), derive_seed(42, 7));
        assert_ne!(derive_seed(42, 7), derive_seed(43, 7));
        assert_ne!(derive_seed2(1, 2, 3), derive_seed2(1, 3, 2));
    }
}
