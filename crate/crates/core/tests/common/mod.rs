//! Samplers shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use annulus_lab::linalg::{complex_gaussian, operator_norm, random_unitary_with, SeededRng};
use annulus_lab::{AnnulusRational, ComplexMatrix, C64};
use rand::Rng;

pub fn tol() -> annulus_lab::Tolerances {
    annulus_lab::Tolerances::default()
}

fn log_uniform(lo: f64, hi: f64, rng: &mut SeededRng) -> f64 {
    lo * (hi / lo).powf(rng.random::<f64>())
}

fn polar(modulus: f64, rng: &mut SeededRng) -> C64 {
    C64::from_polar(modulus, 2.0 * PI * rng.random::<f64>())
}

/// Rational function with up to `max_roots` roots per factor, `q1` root
/// moduli in `[a_lo, a_hi]` and `q2` root moduli in `[b_lo * r, b_hi * r]`.
pub fn sample_rational(
    r: f64,
    max_roots: usize,
    (a_lo, a_hi): (f64, f64),
    (b_lo, b_hi): (f64, f64),
    rng: &mut SeededRng,
) -> AnnulusRational {
    let n1 = rng.random_range(0..=max_roots);
    let n2 = rng.random_range(0..=max_roots);
    let deg = rng.random_range(0..=3);
    let q1 = (0..n1).map(|_| polar(log_uniform(a_lo, a_hi, rng), rng)).collect();
    let q2 = (0..n2).map(|_| polar(r * log_uniform(b_lo, b_hi, rng), rng)).collect();
    let p = (0..=deg).map(|_| complex_gaussian(rng)).collect();
    AnnulusRational::new(r, p, q1, q2, C64::new(1.0, 0.0)).expect("sampled roots are admissible")
}

/// Normal matrix with eigenvalue moduli in `[lo, hi]`; with probability
/// `boundary` an eigenvalue is pushed onto `|z| = lo` or `|z| = hi`.
pub fn normal_with_boundary(n: usize, lo: f64, hi: f64, boundary: f64, rng: &mut SeededRng) -> ComplexMatrix {
    let lambdas: Vec<C64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let m = if u < boundary / 2.0 {
                lo
            } else if u < boundary {
                hi
            } else {
                log_uniform(lo, hi, rng)
            };
            polar(m, rng)
        })
        .collect();
    let q = random_unitary_with(n, rng);
    q.matmul(&ComplexMatrix::from_diag(&lambdas)).matmul(&q.adjoint())
}

/// A commuting pair of contractions. Kinds cycle through simultaneously
/// diagonal pairs, a matrix and a polynomial in it, and `(T, rT^-1)`.
pub fn commuting_pair(n: usize, kind: usize, rng: &mut SeededRng) -> (ComplexMatrix, ComplexMatrix) {
    match kind % 3 {
        0 => {
            let q = random_unitary_with(n, rng);
            let mut diag = || {
                let d: Vec<C64> = (0..n).map(|_| polar(rng.random::<f64>().sqrt(), rng)).collect();
                q.matmul(&ComplexMatrix::from_diag(&d)).matmul(&q.adjoint())
            };
            (diag(), diag())
        }
        1 => {
            let a = annulus_lab::linalg::gaussian_matrix(n, n, rng);
            let t1 = a.scale_real(rng.random_range(0.3..1.0) / operator_norm(&a));
            let c: Vec<C64> = (0..3).map(|_| complex_gaussian(rng)).collect();
            let poly = &(&ComplexMatrix::identity(n).scale(c[0]) + &t1.scale(c[1])) + &t1.matmul(&t1).scale(c[2]);
            let t2 = poly.scale_real(rng.random_range(0.3..1.0) / operator_norm(&poly).max(1e-300));
            (t1, t2)
        }
        _ => {
            let r = rng.random_range(0.2..0.8);
            let t = annulus_lab::classes::random_singular_value_window(n, r, rng);
            let s = annulus_lab::linalg::inverse(&t, &tol()).unwrap().scale_real(r);
            (t, s)
        }
    }
}
