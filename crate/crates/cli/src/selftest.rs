//! Reduced invariant suite: each check runs a handful of seeded instances.

use annulus_lab::calculus::{eval_contour, eval_direct, eval_laurent_certified, ContourSpec, DEFAULT_NODES};
use annulus_lab::classes::{
    certify, certify_with_battery, involution, random_normal_in_annulus, random_normal_with_moduli,
    random_singular_value_window, StressBattery, Verdict,
};
use annulus_lab::demo::demo_example;
use annulus_lab::dilation::{ando_pair, build_model, verify_model, verify_moments, verify_single_carrier};
use annulus_lab::linalg::{inverse, operator_norm, seeded_rng, sub_seed, SeededRng};
use annulus_lab::rational::{order_for_tolerance, TestFunctionFamily};
use annulus_lab::unitary::{decompose, membership_subspaces, random_ar_unitary};
use annulus_lab::{AnnulusRational, Result, Tolerances, C64};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct SelftestCheck {
    pub name: String,
    pub cases: usize,
    pub passed: usize,
    /// Largest measured residual (or ratio) across the cases.
    pub worst: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct SelftestReport {
    pub version: String,
    pub seed: u64,
    pub checks: Vec<SelftestCheck>,
    pub pass: bool,
}

struct Tally {
    cases: usize,
    passed: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Self { cases: 0, passed: 0, worst: 0.0 }
    }

    fn record(&mut self, value: f64, ok: bool) {
        self.cases += 1;
        self.passed += usize::from(ok);
        self.worst = self.worst.max(value);
    }

    fn finish(self, name: &str) -> SelftestCheck {
        SelftestCheck { name: name.into(), cases: self.cases, passed: self.passed, worst: self.worst, pass: self.passed == self.cases }
    }
}

/// Default-shaped family restricted to root ratios at most `ratio` on both sides.
struct Sampler {
    family: TestFunctionFamily,
    ratio: f64,
}

fn separated(ratio: f64) -> Sampler {
    let family =
        TestFunctionFamily { max_q1_roots: 2, max_q2_roots: 2, max_p_degree: 3, q1_max_modulus: 4.0, q2_divisor: 4.0 };
    Sampler { family, ratio }
}

impl Sampler {
    /// Rejection-samples until every root ratio is at most `ratio`.
    fn sample(&self, r: f64, rng: &mut SeededRng) -> AnnulusRational {
        loop {
            let f = self.family.sample(r, rng);
            let outer_ok = f.q1_roots.iter().all(|a| 1.0 / a.norm() <= self.ratio);
            let inner_ok = f.q2_roots.iter().all(|b| b.norm() / r <= self.ratio);
            if outer_ok && inner_ok {
                return f;
            }
        }
    }
}

pub fn run(seed: u64, tol: &Tolerances) -> std::result::Result<SelftestReport, String> {
    inner(seed, tol).map_err(|e| e.to_string())
}

fn inner(seed: u64, tol: &Tolerances) -> Result<SelftestReport> {
    let rng_for = |stream: u64, i: u64| seeded_rng(sub_seed(sub_seed(seed, stream), i));
    let mut checks = Vec::new();

    let mut t = Tally::new();
    for r in [0.25, 0.5, 0.81] {
        let rep = demo_example(r, tol)?;
        let err = rep.checks.iter().map(|c| c.error).fold(0.0, f64::max);
        t.record(err, rep.pass);
    }
    checks.push(t.finish("2x2 example matrix"));

    let r = 0.5;
    let battery = StressBattery::new(r, 200, sub_seed(seed, 100))?;
    let mut necessary = Tally::new();
    let mut invol = Tally::new();
    for i in 0..20 {
        let mut rng = rng_for(1, i);
        let n = 1 + (i as usize % 4);
        let t = random_normal_in_annulus(n, r, &mut rng);
        let rep = certify_with_battery(&t, &battery, tol)?;
        necessary.record(rep.max_ratio, rep.verdict == Verdict::PassedStress && rep.max_ratio <= 1.0 + 1e-10);
        let s = involution(&t, r, tol)?;
        let rep = certify_with_battery(&s, &battery, tol)?;
        let back = operator_norm(&(&involution(&s, r, tol)? - &t));
        invol.record(back, rep.verdict == Verdict::PassedStress && back <= 1e-12);
    }
    let example = certify(&annulus_lab::classes::example_matrix(0.25), 0.25, 500, seed, tol)?;
    necessary.record(0.0, matches!(example.verdict, Verdict::Refuted | Verdict::WilliamsRefuted));
    checks.push(necessary.finish("normal matrices pass, example refuted"));
    checks.push(invol.finish("involution symmetry"));

    let mut t = Tally::new();
    for i in 0..20 {
        let mut rng = rng_for(2, i);
        let r = 0.3 + 0.02 * i as f64;
        let t_mat = random_normal_with_moduli(1 + i as usize % 4, r + 0.03, 0.97, &mut rng);
        let f = separated(0.8).sample(r, &mut rng);
        let order = order_for_tolerance(&f, 1e-10, 1.0 + 1e-12, r / (1.0 + 1e-12), 4000)?;
        let direct = eval_direct(&f, &t_mat, tol)?;
        let laurent = eval_laurent_certified(&f, &t_mat, order, tol)?;
        let contour = eval_contour(&f, &t_mat, ContourSpec::automatic(&f, &t_mat, DEFAULT_NODES)?, tol)?;
        let diff = operator_norm(&(&direct - &laurent.value)).max(operator_norm(&(&direct - &contour)));
        t.record(diff, diff <= 1e-8 && operator_norm(&(&direct - &laurent.value)) <= laurent.error_bound);
    }
    checks.push(t.finish("functional-calculus routes agree"));

    let mut t = Tally::new();
    for i in 0..20 {
        let mut rng = rng_for(3, i);
        let inst = random_ar_unitary(1 + i as usize % 3, 1 + (i as usize / 3) % 3, 0.4, &mut rng)?;
        let d = decompose(&inst.n, 0.4, tol)?;
        let (m1, m2) = membership_subspaces(&inst.n, 0.4, 2, tol)?;
        let err = d.p1.distance(&inst.p1()).max(d.p2.distance(&inst.p2()));
        let routes = m1.distance(&d.p1).max(m2.distance(&d.p2));
        t.record(err.max(routes), err <= 1e-10 && routes <= 1e-9);
    }
    checks.push(t.finish("annulus-unitary roundtrip"));

    let mut t = Tally::new();
    for i in 0..10 {
        let mut rng = rng_for(4, i);
        let r = 0.5;
        let t1 = random_singular_value_window(1 + i as usize % 3, r, &mut rng);
        let t2 = inverse(&t1, tol)?.scale_real(r);
        let pair = ando_pair(&t1, &t2, 6, tol)?;
        let words = pair.word_moment_residual(5);
        let comm = pair.commutator_on_blocks(4);
        t.record(words.max(comm), words <= 1e-10 && comm <= 1e-10);
    }
    checks.push(t.finish("commuting dilation words"));

    let mut model_check = Tally::new();
    let mut moments = Tally::new();
    for i in 0..6 {
        let mut rng = rng_for(5, i);
        let r = 0.5;
        let t_mat = random_singular_value_window(1 + i as usize % 3, r, &mut rng);
        let model = build_model(&t_mat, r, 24, tol)?;
        for _ in 0..3 {
            let f = separated(0.4).sample(r, &mut rng);
            let v = verify_model(&model, &t_mat, &f, 1e-8, tol)?;
            model_check.record(v.residual, v.residual <= v.tail.bound + 1e-10 && v.flip_defect == 0.0);
        }
        let m = verify_moments(&model, &t_mat, 24, tol)?;
        moments.record(m, m <= 1e-10);
    }
    checks.push(model_check.finish("normal boundary model"));
    checks.push(moments.finish("model moments"));

    let mut t = Tally::new();
    for i in 0..6 {
        let mut rng = rng_for(6, i);
        let r = 0.5;
        let t_mat = random_singular_value_window(1 + i as usize % 3, r, &mut rng);
        let one = C64::new(1.0, 0.0);
        let sampled = separated(0.6).sample(r, &mut rng);
        let g = AnnulusRational::new(r, sampled.p.clone(), sampled.q1_roots.clone(), vec![], one)?;
        let f = AnnulusRational::new(r, vec![one], vec![], vec![C64::new(0.2, 0.1)], one)?;
        for h in [&g, &f] {
            let d = order_for_tolerance(h, 1e-11, 1.0 + 1e-12, r / (1.0 + 1e-12), 2000)?;
            let v = verify_single_carrier(&t_mat, h, d, tol)?;
            t.record(v.residual, v.residual <= 1e-10);
        }
    }
    checks.push(t.finish("single-carrier special cases"));

    let pass = checks.iter().all(|c| c.pass);
    Ok(SelftestReport { version: annulus_lab::VERSION.to_string(), seed, checks, pass })
}
