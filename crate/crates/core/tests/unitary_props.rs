mod common;

use annulus_lab::linalg::{operator_norm, random_unitary_with, seeded_rng};
use annulus_lab::unitary::{decompose, is_ar_unitary, make_ar_unitary, membership_subspaces, random_ar_unitary};
use annulus_lab::{ComplexMatrix, Error};
use common::tol;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_roundtrip(seed in any::<u64>(), r in 0.1f64..0.9, n1 in 0usize..=3, n2 in 0usize..=3) {
        prop_assume!(n1 + n2 > 0);
        let inst = random_ar_unitary(n1, n2, r, &mut seeded_rng(seed)).unwrap();
        prop_assert!(is_ar_unitary(&inst.n, r, &tol()).unwrap());
        let d = decompose(&inst.n, r, &tol()).unwrap();
        prop_assert!(d.p1.distance(&inst.p1()) <= 1e-10);
        prop_assert!(d.p2.distance(&inst.p2()) <= 1e-10);
        prop_assert!(operator_norm(&d.p1.matmul(&d.p2)) <= 1e-10);
        prop_assert!(d.residual <= 1e-10);
        prop_assert!(d.riesz_defect <= 1e-9);
        prop_assert_eq!(d.u1.rows(), n1);
        prop_assert_eq!(d.u2.rows(), n2);
        // the recovered parts rebuild N in the recovered bases
        let rebuilt = d.q1.matmul(&d.u1).matmul(&d.q1.adjoint());
        let rebuilt = &rebuilt + &d.q2.matmul(&d.u2.scale_real(r)).matmul(&d.q2.adjoint());
        prop_assert!(rebuilt.distance(&inst.n) <= 1e-10);
    }

    #[test]
    fn spectral_and_norm_routes_agree(seed in any::<u64>(), r in 0.1f64..0.9, n1 in 0usize..=3, n2 in 0usize..=3) {
        prop_assume!(n1 + n2 > 0);
        let inst = random_ar_unitary(n1, n2, r, &mut seeded_rng(seed)).unwrap();
        let d = decompose(&inst.n, r, &tol()).unwrap();
        let (m1, m2) = membership_subspaces(&inst.n, r, 2, &tol()).unwrap();
        prop_assert!(m1.distance(&d.p1) <= 1e-9);
        prop_assert!(m2.distance(&d.p2) <= 1e-9);
    }

    #[test]
    fn construction_is_recognized(seed in any::<u64>(), r in 0.1f64..0.9, n1 in 0usize..=3, n2 in 0usize..=3) {
        let mut rng = seeded_rng(seed);
        let u1 = random_unitary_with(n1, &mut rng);
        let u2 = random_unitary_with(n2, &mut rng);
        let n = make_ar_unitary(&u1, &u2, r, &tol()).unwrap();
        prop_assert!(is_ar_unitary(&n, r, &tol()).unwrap());
        prop_assert!(n.distance(&ComplexMatrix::block_diag(&[&u1, &u2.scale_real(r)])) == 0.0);
    }

    #[test]
    fn perturbed_spectrum_rejected(seed in any::<u64>(), r in 0.1f64..0.8, n in 1usize..=3, push in 1e-4f64..1e-2) {
        let inst = random_ar_unitary(n, n, r, &mut seeded_rng(seed)).unwrap();
        let bumped = inst.n.scale_real(1.0 + push);
        prop_assert!(!is_ar_unitary(&bumped, r, &tol()).unwrap());
        prop_assert!(matches!(decompose(&bumped, r, &tol()), Err(Error::NotArUnitary(_))));
    }
}
