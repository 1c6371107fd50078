mod common;

use annulus_lab::classes::{
    certify, cnn_split, double_contraction_check, example_matrix, involution, norm_window, random_normal_in_annulus,
    random_singular_value_window, test_ratio, williams_verdict, StressBattery, Verdict, WilliamsVerdict,
};
use annulus_lab::linalg::{gaussian_matrix, operator_norm, random_unitary_with, seeded_rng};
use annulus_lab::ComplexMatrix;
use common::{normal_with_boundary, tol};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn involution_is_an_involution(seed in any::<u64>(), r in 0.1f64..0.9, n in 1usize..=5) {
        let t = random_singular_value_window(n, r, &mut seeded_rng(seed));
        let back = involution(&involution(&t, r, &tol()).unwrap(), r, &tol()).unwrap();
        prop_assert!(operator_norm(&(&back - &t)) <= 1e-12);
    }

    #[test]
    fn double_contraction_symmetric(seed in any::<u64>(), r in 0.1f64..0.9, n in 1usize..=4, stretch in 0.8f64..1.25) {
        let mut rng = seeded_rng(seed);
        let t = random_singular_value_window(n, r, &mut rng).scale_real(stretch);
        let s = involution(&t, r, &tol()).unwrap();
        prop_assert_eq!(double_contraction_check(&t, r, &tol()).unwrap(), double_contraction_check(&s, r, &tol()).unwrap());
    }

    #[test]
    fn closed_annulus_normals_pass(seed in any::<u64>(), r in 0.1f64..0.9, n in 1usize..=4) {
        let mut rng = seeded_rng(seed);
        let t = normal_with_boundary(n, r, 1.0, 0.4, &mut rng);
        prop_assert!(norm_window(&t, r, &tol()).unwrap().0);
        prop_assert!(double_contraction_check(&t, r, &tol()).unwrap());
        let report = certify(&t, r, 60, seed, &tol()).unwrap();
        prop_assert_eq!(report.verdict, Verdict::PassedStress);
        prop_assert!(report.max_ratio <= 1.0 + 1e-10);
    }

    #[test]
    fn involuted_battery_sees_same_ratios(seed in any::<u64>(), r in 0.2f64..0.8, n in 1usize..=3) {
        let t = random_normal_in_annulus(n, r, &mut seeded_rng(seed));
        let battery = StressBattery::new(r, 40, seed).unwrap();
        let (a, _) = battery.max_ratio(&t, &tol()).unwrap();
        let s = involution(&t, r, &tol()).unwrap();
        let (b, _) = battery.involuted().unwrap().max_ratio(&s, &tol()).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn cnn_split_recovers_planted_block(seed in any::<u64>(), k in 0usize..=3, m in 0usize..=3) {
        let mut rng = seeded_rng(seed);
        let normal = random_normal_in_annulus(k, 0.5, &mut rng);
        // a generic square block of size >= 2 is completely non-normal
        let m = if m >= 2 { m } else { 0 };
        let cnn = gaussian_matrix(m, m, &mut rng);
        let q = random_unitary_with(k + m, &mut rng);
        let t = q.matmul(&ComplexMatrix::block_diag(&[&normal, &cnn])).matmul(&q.adjoint());
        let split = cnn_split(&t, &tol()).unwrap();
        prop_assert_eq!(split.cnn_dim(), m);
        let p = &split.p_cnn;
        prop_assert!(p.matmul(p).distance(p) <= 1e-10);
        prop_assert!(p.adjoint().distance(p) <= 1e-12);
        prop_assert!(p.matmul(&t).distance(&t.matmul(p)) <= 1e-9 * operator_norm(&t).max(1.0));
        let tn = split.p_normal.matmul(&t).matmul(&split.p_normal);
        prop_assert!(tn.self_commutator().frobenius_norm() <= 1e-9 * operator_norm(&t).max(1.0).powi(2));
    }

    #[test]
    fn refutations_replay(r in 0.05f64..0.3, seed in any::<u64>()) {
        let t = example_matrix(r);
        let report = certify(&t, r, 200, seed, &tol()).unwrap();
        prop_assert!(matches!(report.verdict, Verdict::Refuted | Verdict::WilliamsRefuted));
        if let Some(w) = &report.witness {
            let ratio = test_ratio(w, &t, &tol()).unwrap();
            prop_assert!(ratio > 1.0 + tol().verify_tol);
            prop_assert!((ratio - report.max_ratio).abs() <= 1e-9);
        }
    }
}

#[test]
fn necessary_failure_carries_witness() {
    let r = 0.5;
    let t = ComplexMatrix::identity(2).scale_real(1.2);
    let report = certify(&t, r, 10, 1, &tol()).unwrap();
    assert_eq!(report.verdict, Verdict::Refuted);
    assert!(test_ratio(report.witness.as_ref().unwrap(), &t, &tol()).unwrap() > 1.1);
    let t = ComplexMatrix::identity(2).scale_real(0.4);
    let report = certify(&t, r, 10, 1, &tol()).unwrap();
    assert_eq!(report.verdict, Verdict::Refuted);
    assert!(test_ratio(report.witness.as_ref().unwrap(), &t, &tol()).unwrap() > 1.1);
}

#[test]
fn zero_trials_stop_after_necessary_checks() {
    let r = 0.5;
    let t = ComplexMatrix::identity(1);
    assert_eq!(certify(&t, r, 0, 1, &tol()).unwrap().verdict, Verdict::PassedNecessary);
}

#[test]
fn example_is_williams_refuted_above_one_third() {
    for r in [0.4, 0.5, 0.81] {
        let t = example_matrix(r);
        assert_eq!(williams_verdict(&t, r, &tol()).unwrap(), WilliamsVerdict::MinimalDiskRefutation);
        assert_eq!(certify(&t, r, 100, 3, &tol()).unwrap().verdict, Verdict::WilliamsRefuted);
    }
}
