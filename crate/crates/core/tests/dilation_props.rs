mod common;

use annulus_lab::classes::random_singular_value_window;
use annulus_lab::dilation::{
    ando_pair, build_model, egervary_dilation, tail_report, verify_model, verify_model_resolvent, verify_moments,
    verify_single_carrier, Carrier,
};
use annulus_lab::linalg::{matrix_power, seeded_rng, unitarity_defect};
use annulus_lab::{AnnulusRational, ComplexMatrix, Error, C64};
use common::{commuting_pair, sample_rational, tol};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn egervary_reproduces_powers(seed in any::<u64>(), r in 0.1f64..0.9, n in 1usize..=4, d in 1usize..=8) {
        let t = random_singular_value_window(n, r, &mut seeded_rng(seed)).scale_real(0.999);
        let (u, embed) = egervary_dilation(&t, d, &tol()).unwrap();
        prop_assert!(unitarity_defect(&u) <= 1e-12);
        for k in 0..=d {
            let compressed = embed.adjoint().matmul(&matrix_power(&u, k)).matmul(&embed);
            prop_assert!(compressed.distance(&matrix_power(&t, k)) <= 1e-12);
        }
    }

    #[test]
    fn ando_pair_reproduces_words(seed in any::<u64>(), n in 1usize..=4, kind in 0usize..3, m in 2usize..=6) {
        let (t1, t2) = commuting_pair(n, kind, &mut seeded_rng(seed));
        let pair = ando_pair(&t1, &t2, m, &tol()).unwrap();
        prop_assert!(unitarity_defect(&pair.g) <= 1e-12);
        prop_assert!(pair.isometry_defect_on_budget() <= 1e-12);
        prop_assert!(pair.commutator_on_blocks(m - 2) <= 1e-10);
        prop_assert!(pair.word_moment_residual(m) <= 1e-10);
    }

    #[test]
    fn model_tail_is_sound(seed in any::<u64>(), r in 0.3f64..0.8, n in 1usize..=3) {
        let mut rng = seeded_rng(seed);
        let t = random_singular_value_window(n, r, &mut rng);
        let f = sample_rational(r, 2, (1.5, 4.0), (0.25, 0.66), &mut rng);
        let (d, longer) = (12, 40);
        let short = verify_model(&build_model(&t, r, d, &tol()).unwrap(), &t, &f, f64::INFINITY, &tol()).unwrap();
        let long = verify_model(&build_model(&t, r, longer, &tol()).unwrap(), &t, &f, f64::INFINITY, &tol()).unwrap();
        prop_assert!((short.residual - long.residual).abs() <= short.tail.bound + 1e-12);
        prop_assert!(short.residual <= short.tail.bound + 1e-10);
        prop_assert_eq!(short.flip_defect, 0.0);
    }

    #[test]
    fn resolvent_route_agrees(seed in any::<u64>(), r in 0.3f64..0.8, n in 1usize..=3) {
        let mut rng = seeded_rng(seed);
        let t = random_singular_value_window(n, r, &mut rng);
        let f = sample_rational(r, 2, (2.0, 4.0), (0.25, 0.5), &mut rng);
        let model = build_model(&t, r, 30, &tol()).unwrap();
        let series = verify_model(&model, &t, &f, 1e-8, &tol()).unwrap();
        prop_assert!(series.passed);
        prop_assert!(verify_model_resolvent(&model, &t, &f, &tol()).unwrap() <= 1e-9);
    }

    #[test]
    fn moments_within_budget(seed in any::<u64>(), r in 0.2f64..0.8, n in 1usize..=4, d in 1usize..=12) {
        let t = random_singular_value_window(n, r, &mut seeded_rng(seed));
        let model = build_model(&t, r, d, &tol()).unwrap();
        prop_assert!(verify_moments(&model, &t, d, &tol()).unwrap() <= 1e-10);
        let over = verify_moments(&model, &t, d + 1, &tol());
        prop_assert!(matches!(over, Err(Error::BudgetExceeded { .. })), "{:?}", over);
    }

    #[test]
    fn single_carrier_both_sides(seed in any::<u64>(), r in 0.2f64..0.8, n in 1usize..=3) {
        let mut rng = seeded_rng(seed);
        let t = random_singular_value_window(n, r, &mut rng);
        let sampled = sample_rational(r, 3, (1.5, 4.0), (0.25, 0.66), &mut rng);
        let one = C64::new(1.0, 0.0);
        let g = AnnulusRational::new(r, sampled.p.clone(), sampled.q1_roots.clone(), vec![], one).unwrap();
        let v = verify_single_carrier(&t, &g, 80, &tol()).unwrap();
        prop_assert_eq!(v.carrier, Carrier::Outer);
        prop_assert!(v.residual <= v.tail_bound + 1e-10);
        let mut roots = sampled.q2_roots.clone();
        roots.push(C64::new(0.3 * r, 0.0));
        let f = AnnulusRational::new(r, vec![one], vec![], roots, one).unwrap();
        let v = verify_single_carrier(&t, &f, 80, &tol()).unwrap();
        prop_assert_eq!(v.carrier, Carrier::Inner);
        prop_assert!(v.residual <= v.tail_bound + 1e-10);
    }
}

#[test]
fn ando_rejects_bad_pairs() {
    let x = ComplexMatrix::from_real_rows(&[&[0.0, 0.5], &[0.0, 0.0]]);
    assert!(matches!(ando_pair(&x, &x.adjoint(), 3, &tol()), Err(Error::NotCommuting { .. })));
    let big = ComplexMatrix::identity(2).scale_real(1.5);
    assert!(matches!(ando_pair(&big, &ComplexMatrix::identity(2), 3, &tol()), Err(Error::NotContraction { .. })));
    assert!(matches!(ando_pair(&x, &x, 1, &tol()), Err(Error::InvalidInput(_))));
}

#[test]
fn budget_errors_name_the_shortfall() {
    let r = 0.5;
    let t = random_singular_value_window(2, r, &mut seeded_rng(1));
    let f = AnnulusRational::simple_pole(r, C64::new(1.1, 0.0)).unwrap();
    let model = build_model(&t, r, 4, &tol()).unwrap();
    let tail = tail_report(&f, &t, 4, &tol()).unwrap();
    match verify_model(&model, &t, &f, 1e-10, &tol()) {
        Err(Error::BudgetExceeded { bound, requested }) => {
            assert_eq!(bound, tail.bound);
            assert_eq!(requested, 1e-10);
        }
        other => panic!("expected a budget error, got {other:?}"),
    }
}
