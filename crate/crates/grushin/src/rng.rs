//! Seeded random inputs: complex Gaussian matrices and child-seed mixing.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linops::{CMatrix, C64};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent standard normal real and imaginary parts.
pub fn complex_gaussian(rng: &mut Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

pub fn complex_gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn uniform(rng: &mut Rng) -> f64 {
    let u: f64 = rand_distr::Open01.sample(rng);
    u
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed for task `index` of stream `tag`.
pub fn child_seed(root: u64, tag: &str, index: u64) -> u64 {
    let mut h = mix(root);
    for b in tag.bytes() {
        h = mix(h ^ u64::from(b));
    }
    mix(h ^ mix(index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let a = complex_gaussian_matrix(&mut seeded(5), 3, 3);
        let b = complex_gaussian_matrix(&mut seeded(5), 3, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn child_seeds_differ_by_every_component() {
        let base = child_seed(1, "cloud", 0);
        assert_ne!(base, child_seed(2, "cloud", 0));
        assert_ne!(base, child_seed(1, "cloux", 0));
        assert_ne!(base, child_seed(1, "cloud", 1));
        assert_eq!(base, child_seed(1, "cloud", 0));
    }
}
