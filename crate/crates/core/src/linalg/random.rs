use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::{ComplexMatrix, C64};
use super::qr_thin;

/// Counter-based stream cipher RNG; identical streams on every platform.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `stream` from a parent seed:
/// `splitmix64(seed ^ splitmix64(stream))`.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

/// Standard complex Gaussian, `E|z|^2 = 1`.
pub fn complex_gaussian(rng: &mut SeededRng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// diagonal of `R` made real positive.
pub fn random_unitary_with(n: usize, rng: &mut SeededRng) -> ComplexMatrix {
    qr_thin(&gaussian_matrix(n, n, rng)).0
}

pub fn random_unitary(n: usize, seed: u64) -> ComplexMatrix {
    random_unitary_with(n, &mut seeded_rng(seed))
}

/// `n x k` matrix with orthonormal columns.
pub fn random_isometry(n: usize, k: usize, rng: &mut SeededRng) -> ComplexMatrix {
    qr_thin(&gaussian_matrix(n, k, rng)).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::isometry_defect;

    #[test]
    fn unitaries_are_unitary_and_deterministic() {
        let u1 = random_unitary(1, 99);
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-15);
        let u = random_unitary(4, 7);
        assert!(isometry_defect(&u) <= 1e-12);
        assert_eq!(u, random_unitary(4, 7));
        assert_ne!(u, random_unitary(4, 8));
    }

    #[test]
    fn sub_seeds_differ() {
        assert_ne!(sub_seed(1, 0), sub_seed(1, 1));
        assert_ne!(sub_seed(1, 0), sub_seed(2, 0));
        assert_eq!(sub_seed(5, 3), sub_seed(5, 3));
    }
}
