//! Certification of annulus contractions: necessary spectral and norm
//! conditions, randomized von Neumann stress tests against rational test
//! functions, and the normal / completely non-normal split used by the
//! minimal-disk refutation.

use serde::{Deserialize, Serialize};

use crate::calculus::eval_direct;
use crate::error::{Error, Result};
use crate::linalg::{
    eigenvalues, eigh, inverse, operator_norm, orthonormal_basis, random_unitary_with, seeded_rng, sub_seed,
    ComplexMatrix, SeededRng, Tolerances, C64, ONE, ZERO,
};
use crate::rational::{AnnulusRational, TestFunctionFamily};
use crate::VERSION;

/// Sampling resolution for the boundary sup norm of test functions.
pub const SUP_NODES: usize = 1024;

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(Error::BadRadius(r))
    }
}

/// `[[sqrt r, 1 - r], [0, sqrt r]]`: invertible, spectrum `{sqrt r}`, norm 1,
/// completely non-normal.
pub fn example_matrix(r: f64) -> ComplexMatrix {
    let s = r.sqrt();
    ComplexMatrix::from_real_rows(&[&[s, 1.0 - r], &[0.0, s]])
}

pub fn spectrum_in_annulus(t: &ComplexMatrix, r: f64, tol: &Tolerances) -> Result<bool> {
    check_radius(r)?;
    t.require_square()?;
    let eps = tol.verify_tol;
    Ok(eigenvalues(t)?.iter().all(|l| l.norm() >= r - eps && l.norm() <= 1.0 + eps))
}

/// `(r - tol <= ||T|| <= 1 + tol, ||T||)`.
pub fn norm_window(t: &ComplexMatrix, r: f64, tol: &Tolerances) -> Result<(bool, f64)> {
    check_radius(r)?;
    t.require_square()?;
    let norm = operator_norm(t);
    let eps = tol.verify_tol;
    Ok((norm >= r - eps && norm <= 1.0 + eps, norm))
}

/// `rT^-1`.
pub fn involution(t: &ComplexMatrix, r: f64, tol: &Tolerances) -> Result<ComplexMatrix> {
    check_radius(r)?;
    Ok(inverse(t, tol).map_err(|_| Error::NotInvertible)?.scale_real(r))
}

/// Norms of `T` and `rT^-1`.
pub fn contraction_norms(t: &ComplexMatrix, r: f64, tol: &Tolerances) -> Result<(f64, f64)> {
    let inv = involution(t, r, tol)?;
    Ok((operator_norm(t), operator_norm(&inv)))
}

/// Both `T` and `rT^-1` are contractions up to `verify_tol`.
pub fn double_contraction_check(t: &ComplexMatrix, r: f64, tol: &Tolerances) -> Result<bool> {
    let (a, b) = contraction_norms(t, r, tol)?;
    Ok(a <= 1.0 + tol.verify_tol && b <= 1.0 + tol.verify_tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// A rational function with `||f(T)|| > ||f||_inf` was found.
    Refuted,
    /// Necessary conditions hold and no stress trials were run.
    PassedNecessary,
    /// Necessary conditions hold and every sampled test function obeyed the bound.
    PassedStress,
    /// Stress passed but `T` is completely non-normal with norm 1, so the
    /// closed disk is a minimal spectral set.
    WilliamsRefuted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub version: String,
    pub verdict: Verdict,
    pub r: f64,
    pub dim: usize,
    pub norm_t: f64,
    pub norm_rtinv: f64,
    pub spectrum_ok: bool,
    pub norm_window_ok: bool,
    pub double_contraction_ok: bool,
    pub williams: WilliamsVerdict,
    pub trials: usize,
    /// Largest observed `||f(T)|| / ||f||_inf`, with the sup norm sampled.
    pub max_ratio: f64,
    pub witness: Option<AnnulusRational>,
    pub seed: u64,
}

/// Precomputed test functions with their sampled boundary sup norms.
#[derive(Debug, Clone)]
pub struct StressBattery {
    pub r: f64,
    pub seed: u64,
    pub functions: Vec<AnnulusRational>,
    pub sup_norms: Vec<f64>,
}

impl StressBattery {
    /// Trial `i` draws from `seeded_rng(sub_seed(seed, i))`.
    pub fn new(r: f64, trials: usize, seed: u64) -> Result<Self> {
        Self::with_family(r, trials, seed, &TestFunctionFamily::default())
    }

    pub fn with_family(r: f64, trials: usize, seed: u64, family: &TestFunctionFamily) -> Result<Self> {
        check_radius(r)?;
        let functions: Vec<AnnulusRational> = (0..trials)
            .map(|i| family.sample(r, &mut seeded_rng(sub_seed(seed, i as u64))))
            .collect();
        let sup_norms = functions.iter().map(|f| f.refined_sup_norm(SUP_NODES)).collect();
        Ok(Self { r, seed, functions, sup_norms })
    }

    /// The same battery composed with `z -> r/z`; sup norms carry over.
    pub fn involuted(&self) -> Result<Self> {
        let functions = self.functions.iter().map(|f| f.involute()).collect::<Result<Vec<_>>>()?;
        Ok(Self { r: self.r, seed: self.seed, functions, sup_norms: self.sup_norms.clone() })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Max ratio over the battery and the index attaining it.
    pub fn max_ratio(&self, t: &ComplexMatrix, tol: &Tolerances) -> Result<(f64, Option<usize>)> {
        let mut best = (0.0f64, None);
        for (i, (f, sup)) in self.functions.iter().zip(&self.sup_norms).enumerate() {
            let ratio = operator_norm(&eval_direct(f, t, tol)?) / sup;
            if ratio > best.0 || best.1.is_none() {
                best = (ratio, Some(i));
            }
        }
        Ok(best)
    }
}

/// `||f(T)|| / ||f||_inf` with the sup norm sampled and refined on the boundary.
pub fn test_ratio(f: &AnnulusRational, t: &ComplexMatrix, tol: &Tolerances) -> Result<f64> {
    Ok(operator_norm(&eval_direct(f, t, tol)?) / f.refined_sup_norm(SUP_NODES))
}

/// Randomized check of `||f(T)|| <= ||f||_inf` over a seeded test-function battery.
pub fn vonneumann_stress(t: &ComplexMatrix, r: f64, trials: usize, seed: u64, tol: &Tolerances) -> Result<CertificationReport> {
    let battery = StressBattery::new(r, trials, seed)?;
    stress_with_battery(t, &battery, tol)
}

pub fn stress_with_battery(t: &ComplexMatrix, battery: &StressBattery, tol: &Tolerances) -> Result<CertificationReport> {
    let r = battery.r;
    let dim = t.require_square()?;
    let (norm_t, norm_rtinv) = contraction_norms(t, r, tol)?;
    let (max_ratio, idx) = battery.max_ratio(t, tol)?;
    let refuted = max_ratio > 1.0 + tol.verify_tol;
    Ok(CertificationReport {
        version: VERSION.to_string(),
        verdict: if refuted { Verdict::Refuted } else { Verdict::PassedStress },
        r,
        dim,
        norm_t,
        norm_rtinv,
        spectrum_ok: spectrum_in_annulus(t, r, tol)?,
        norm_window_ok: norm_t >= r - tol.verify_tol && norm_t <= 1.0 + tol.verify_tol,
        double_contraction_ok: norm_t <= 1.0 + tol.verify_tol && norm_rtinv <= 1.0 + tol.verify_tol,
        williams: williams_verdict(t, r, tol)?,
        trials: battery.len(),
        max_ratio,
        witness: if refuted { idx.map(|i| battery.functions[i].clone()) } else { None },
        seed: battery.seed,
    })
}

/// Full certification: necessary conditions, then the stress battery, then
/// the minimal-disk test.
pub fn certify(t: &ComplexMatrix, r: f64, trials: usize, seed: u64, tol: &Tolerances) -> Result<CertificationReport> {
    check_radius(r)?;
    let battery = StressBattery::new(r, trials, seed)?;
    certify_with_battery(t, &battery, tol)
}

pub fn certify_with_battery(t: &ComplexMatrix, battery: &StressBattery, tol: &Tolerances) -> Result<CertificationReport> {
    let r = battery.r;
    let dim = t.require_square()?;
    let eps = tol.verify_tol;
    let spectrum_ok = spectrum_in_annulus(t, r, tol)?;
    let (norm_t, norm_rtinv) = match contraction_norms(t, r, tol) {
        Ok(v) => v,
        Err(Error::NotInvertible) => (operator_norm(t), f64::INFINITY),
        Err(e) => return Err(e),
    };
    let norm_window_ok = norm_t >= r - eps && norm_t <= 1.0 + eps;
    let double_ok = norm_t <= 1.0 + eps && norm_rtinv <= 1.0 + eps;
    let mut report = CertificationReport {
        version: VERSION.to_string(),
        verdict: Verdict::PassedNecessary,
        r,
        dim,
        norm_t,
        norm_rtinv,
        spectrum_ok,
        norm_window_ok,
        double_contraction_ok: double_ok,
        williams: WilliamsVerdict::NotApplicable,
        trials: 0,
        max_ratio: norm_t.max(norm_rtinv),
        witness: None,
        seed: battery.seed,
    };
    if !double_ok || !spectrum_ok {
        // Spectrum outside the annulus forces one of the two norms above 1.
        report.verdict = Verdict::Refuted;
        report.witness = Some(if norm_t > norm_rtinv {
            AnnulusRational::identity(r)?
        } else {
            AnnulusRational::new(r, vec![C64::new(r, 0.0)], vec![], vec![ZERO], ONE)?
        });
        return Ok(report);
    }
    report.max_ratio = 0.0;
    if !battery.is_empty() {
        let stress = stress_with_battery(t, battery, tol)?;
        report.trials = stress.trials;
        report.max_ratio = stress.max_ratio;
        report.verdict = stress.verdict;
        report.witness = stress.witness;
    }
    report.williams = williams_verdict(t, r, tol)?;
    if report.verdict != Verdict::Refuted && report.williams == WilliamsVerdict::MinimalDiskRefutation {
        report.verdict = Verdict::WilliamsRefuted;
    }
    Ok(report)
}

/// Orthogonal projectors onto the largest reducing subspace on which `T` is
/// normal and onto its completely non-normal complement.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnSplit {
    pub p_normal: ComplexMatrix,
    pub p_cnn: ComplexMatrix,
    /// Orthonormal basis of the completely non-normal part, as columns.
    pub cnn_basis: ComplexMatrix,
}

impl CnnSplit {
    pub fn cnn_dim(&self) -> usize {
        self.cnn_basis.cols()
    }
}

/// The completely non-normal part is the smallest subspace containing the
/// range of `T*T - TT*` and invariant under `T` and `T*`.
pub fn cnn_split(t: &ComplexMatrix, tol: &Tolerances) -> Result<CnnSplit> {
    let n = t.require_square()?;
    let norm = operator_norm(t);
    let commutator = t.self_commutator();
    let (vals, q) = eigh(&commutator)?;
    let cutoff = tol.rank_tol * norm * norm;
    let seeds: Vec<Vec<C64>> = vals
        .iter()
        .enumerate()
        .filter(|(_, l)| l.abs() > cutoff && cutoff > 0.0)
        .map(|(j, _)| q.column(j))
        .collect();
    let drop = tol.rank_tol * norm.max(f64::MIN_POSITIVE);
    let mut basis = orthonormal_basis(&seeds, &[], tol.rank_tol);
    let t_adj = t.adjoint();
    let mut next = 0;
    while next < basis.len() && basis.len() < n {
        let v = basis[next].clone();
        let images = [t.matvec(&v), t_adj.matvec(&v)];
        let added = orthonormal_basis(&images, &basis, drop);
        basis.extend(added);
        next += 1;
    }
    let cnn_basis = ComplexMatrix::from_columns(n, &basis);
    let p_cnn = cnn_basis.matmul(&cnn_basis.adjoint());
    let p_normal = &ComplexMatrix::identity(n) - &p_cnn;
    Ok(CnnSplit { p_normal, p_cnn, cnn_basis })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WilliamsVerdict {
    NotApplicable,
    /// `T` is completely non-normal with `||T|| = 1`: the closed disk is a
    /// minimal spectral set, so the closed annulus is not a spectral set.
    MinimalDiskRefutation,
}

pub fn williams_verdict(t: &ComplexMatrix, r: f64, tol: &Tolerances) -> Result<WilliamsVerdict> {
    check_radius(r)?;
    let n = t.require_square()?;
    if n == 0 || (operator_norm(t) - 1.0).abs() > tol.verify_tol {
        return Ok(WilliamsVerdict::NotApplicable);
    }
    let split = cnn_split(t, tol)?;
    Ok(if split.cnn_dim() == n {
        WilliamsVerdict::MinimalDiskRefutation
    } else {
        WilliamsVerdict::NotApplicable
    })
}

/// Normal matrix `Q diag(lambda) Q*` with eigenvalue moduli log-uniform on
/// `[lo, hi]` and uniform arguments.
pub fn random_normal_with_moduli(n: usize, lo: f64, hi: f64, rng: &mut SeededRng) -> ComplexMatrix {
    use rand::Rng;
    let lambdas: Vec<C64> = (0..n)
        .map(|_| {
            let m = lo * (hi / lo).powf(rng.random::<f64>());
            C64::from_polar(m, 2.0 * std::f64::consts::PI * rng.random::<f64>())
        })
        .collect();
    let q = random_unitary_with(n, rng);
    q.matmul(&ComplexMatrix::from_diag(&lambdas)).matmul(&q.adjoint())
}

/// Normal matrix with spectrum in the closed annulus `r <= |z| <= 1`.
pub fn random_normal_in_annulus(n: usize, r: f64, rng: &mut SeededRng) -> ComplexMatrix {
    random_normal_with_moduli(n, r, 1.0, rng)
}

/// `U diag(sigma) V*` with singular values log-uniform on `[r, 1]`; both
/// `T` and `rT^-1` are contractions.
pub fn random_singular_value_window(n: usize, r: f64, rng: &mut SeededRng) -> ComplexMatrix {
    use rand::Rng;
    let sigma: Vec<f64> = (0..n).map(|_| r * (1.0 / r).powf(rng.random::<f64>())).collect();
    let u = random_unitary_with(n, rng);
    let v = random_unitary_with(n, rng);
    u.matmul(&ComplexMatrix::from_real_diag(&sigma)).matmul(&v.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_unitary;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn spectrum_and_norm_examples() {
        let u = random_unitary(3, 1);
        assert!(spectrum_in_annulus(&u, 0.5, &tol()).unwrap());
        let small = ComplexMatrix::identity(2).scale_real(0.1);
        assert!(!spectrum_in_annulus(&small, 0.25, &tol()).unwrap());
        let ex = example_matrix(0.25);
        assert!(spectrum_in_annulus(&ex, 0.25, &tol()).unwrap());
        let (ok, norm) = norm_window(&ex, 0.25, &tol()).unwrap();
        assert!(ok && (norm - 1.0).abs() < 1e-14);
        assert!(!norm_window(&ComplexMatrix::identity(2).scale_real(2.0), 0.25, &tol()).unwrap().0);
        let (ok, norm) = norm_window(&ComplexMatrix::identity(2).scale_real(0.3), 0.3, &tol()).unwrap();
        assert!(ok && (norm - 0.3).abs() < 1e-15);
    }

    #[test]
    fn involution_examples() {
        let r = 0.3;
        let t = ComplexMatrix::identity(2).scale_real(r);
        assert!(involution(&t, r, &tol()).unwrap().distance(&ComplexMatrix::identity(2)) < 1e-15);
        let u = random_unitary(3, 5);
        assert!(involution(&u, r, &tol()).unwrap().distance(&u.adjoint().scale_real(r)) < 1e-13);
        let mut rng = seeded_rng(3);
        let t = random_singular_value_window(4, r, &mut rng);
        let back = involution(&involution(&t, r, &tol()).unwrap(), r, &tol()).unwrap();
        assert!(back.distance(&t) < 1e-12);
        assert_eq!(involution(&ComplexMatrix::zeros(2, 2), r, &tol()), Err(Error::NotInvertible));
    }

    #[test]
    fn double_contraction_examples() {
        let mut rng = seeded_rng(9);
        let t = random_singular_value_window(5, 0.4, &mut rng);
        assert!(double_contraction_check(&t, 0.4, &tol()).unwrap());
        assert!(double_contraction_check(&example_matrix(0.25), 0.25, &tol()).unwrap());
        assert!(!double_contraction_check(&ComplexMatrix::identity(2).scale_real(0.1), 0.25, &tol()).unwrap());
    }

    #[test]
    fn stress_on_normal_and_unitary() {
        let mut rng = seeded_rng(21);
        let t = random_normal_in_annulus(4, 0.4, &mut rng);
        let rep = vonneumann_stress(&t, 0.4, 200, 7, &tol()).unwrap();
        assert_eq!(rep.verdict, Verdict::PassedStress);
        assert!(rep.max_ratio <= 1.0 + 1e-10);
        let u = random_unitary(3, 2);
        assert_eq!(vonneumann_stress(&u, 0.4, 100, 8, &tol()).unwrap().verdict, Verdict::PassedStress);
    }

    #[test]
    fn known_witness_refutes_example() {
        let r = 0.25;
        let f = AnnulusRational::new(r, vec![C64::new(-r, 0.0), ZERO, ONE], vec![], vec![ZERO], ONE).unwrap();
        let ratio = test_ratio(&f, &example_matrix(r), &tol()).unwrap();
        assert!((ratio - 2.0 * (1.0 - r) / (1.0 + r)).abs() < 1e-9);
    }

    #[test]
    fn cnn_examples() {
        let u = random_unitary(3, 4);
        let s = cnn_split(&u, &tol()).unwrap();
        assert_eq!(s.cnn_dim(), 0);
        assert_eq!(s.p_normal, ComplexMatrix::identity(3));
        let s = cnn_split(&example_matrix(0.3), &tol()).unwrap();
        assert!(s.p_cnn.distance(&ComplexMatrix::identity(2)) < 1e-12);
        assert_eq!(williams_verdict(&example_matrix(0.3), 0.3, &tol()).unwrap(), WilliamsVerdict::MinimalDiskRefutation);
        assert_eq!(williams_verdict(&u, 0.3, &tol()).unwrap(), WilliamsVerdict::NotApplicable);
        let half = example_matrix(0.3).scale_real(0.5);
        assert_eq!(williams_verdict(&half, 0.3, &tol()).unwrap(), WilliamsVerdict::NotApplicable);
    }

    #[test]
    fn cnn_recovers_blocks() {
        let n0 = ComplexMatrix::from_diag(&[C64::new(0.5, 0.2), C64::new(-0.3, 0.6)]);
        let j = ComplexMatrix::from_real_rows(&[&[0.4, 1.0, 0.0], &[0.0, 0.4, 1.0], &[0.0, 0.0, 0.4]]);
        let block = ComplexMatrix::block_diag(&[&n0, &j]);
        let q = random_unitary(5, 12);
        let t = q.matmul(&block).matmul(&q.adjoint());
        let s = cnn_split(&t, &tol()).unwrap();
        let want_cnn = q.matmul(&ComplexMatrix::from_real_diag(&[0.0, 0.0, 1.0, 1.0, 1.0])).matmul(&q.adjoint());
        assert!(s.p_cnn.distance(&want_cnn) < 1e-9);
        assert!((&s.p_cnn * &t).distance(&(&t * &s.p_cnn)) < 1e-9);
    }

    #[test]
    fn certify_orders_checks() {
        let tol = tol();
        let rep = certify(&ComplexMatrix::identity(2).scale_real(0.1), 0.25, 10, 1, &tol).unwrap();
        assert_eq!(rep.verdict, Verdict::Refuted);
        let w = rep.witness.unwrap();
        assert!(test_ratio(&w, &ComplexMatrix::identity(2).scale_real(0.1), &tol).unwrap() > 1.0);
        let rep = certify(&ComplexMatrix::identity(2).scale_real(1.5), 0.25, 10, 1, &tol).unwrap();
        assert_eq!(rep.witness, Some(AnnulusRational::identity(0.25).unwrap()));
        let rep = certify(&example_matrix(0.5), 0.5, 0, 1, &tol).unwrap();
        assert_eq!(rep.verdict, Verdict::WilliamsRefuted);
        let rep = certify(&random_unitary(2, 3), 0.5, 0, 1, &tol).unwrap();
        assert_eq!(rep.verdict, Verdict::PassedNecessary);
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("\"verdict\":\"PassedNecessary\""));
    }
}
