//! Normal operators with spectrum on the two boundary circles: recognition,
//! construction as `U1 (+) r U2`, and recovery of the two reducing subspaces
//! by the spectral route and by the norm-preservation route.

use serde::{Deserialize, Serialize};

use crate::calculus::{riesz_projection, ContourSpec, SpectralPart};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_normal, eigh, inverse, matrix_power, random_unitary_with, unitarity_defect, ComplexMatrix, SeededRng,
    Tolerances,
};

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(Error::BadRadius(r))
    }
}

/// Distance of an eigenvalue modulus from the boundary circles that still
/// counts as lying on them.
fn circle_tol(tol: &Tolerances) -> f64 {
    10.0 * tol.eig_tol
}

/// Normal with every eigenvalue on `|z| = 1` or `|z| = r`.
pub fn is_ar_unitary(n: &ComplexMatrix, r: f64, tol: &Tolerances) -> Result<bool> {
    check_radius(r)?;
    let eig = match eig_normal(n, tol) {
        Ok(e) => e,
        Err(Error::NotNormal { .. }) => return Ok(false),
        Err(e) => return Err(e),
    };
    let eps = circle_tol(tol);
    Ok(eig.lambdas.iter().all(|l| (l.norm() - 1.0).abs() <= eps || (l.norm() - r).abs() <= eps))
}

/// `diag(U1, r U2)`.
pub fn make_ar_unitary(u1: &ComplexMatrix, u2: &ComplexMatrix, r: f64, tol: &Tolerances) -> Result<ComplexMatrix> {
    check_radius(r)?;
    for u in [u1, u2] {
        let defect = unitarity_defect(u);
        if defect > tol.verify_tol {
            return Err(Error::NotUnitary { defect });
        }
    }
    Ok(ComplexMatrix::block_diag(&[u1, &u2.scale_real(r)]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArUnitaryDecomposition {
    #[serde(rename = "P1")]
    pub p1: ComplexMatrix,
    #[serde(rename = "P2")]
    pub p2: ComplexMatrix,
    /// `N` compressed to `ran P1` in the basis `q1`.
    #[serde(rename = "U1")]
    pub u1: ComplexMatrix,
    /// `N / r` compressed to `ran P2` in the basis `q2`.
    #[serde(rename = "U2")]
    pub u2: ComplexMatrix,
    /// Largest defect among the projector, unitarity and reduction identities.
    pub residual: f64,
    /// `||P1 - P_outer||` against the Riesz projection.
    pub riesz_defect: f64,
    /// Orthonormal bases of `ran P1`, `ran P2`, as columns.
    pub q1: ComplexMatrix,
    pub q2: ComplexMatrix,
}

/// Splits `N` into its parts on the unit circle and on `|z| = r`.
pub fn decompose(n: &ComplexMatrix, r: f64, tol: &Tolerances) -> Result<ArUnitaryDecomposition> {
    check_radius(r)?;
    let dim = n.require_square()?;
    let eps = circle_tol(tol);
    if 1.0 - r <= 2.0 * eps {
        return Err(Error::NoSpectralGap);
    }
    let eig = eig_normal(n, tol).map_err(|e| match e {
        Error::NotNormal { .. } => Error::NotArUnitary(e.to_string()),
        other => other,
    })?;
    for l in &eig.lambdas {
        let m = l.norm();
        if (m - 1.0).abs() > eps && (m - r).abs() > eps {
            return Err(Error::NotArUnitary(format!("eigenvalue {l} with modulus {m} is off both circles")));
        }
    }
    let outer = |l: crate::C64| (l.norm() - 1.0).abs() <= (l.norm() - r).abs();
    let q1 = eig.basis(outer);
    let q2 = eig.basis(|l| !outer(l));
    let p1 = q1.matmul(&q1.adjoint());
    let p2 = q2.matmul(&q2.adjoint());
    let u1 = q1.adjoint().matmul(n).matmul(&q1);
    let u2 = q2.adjoint().matmul(n).matmul(&q2).scale_real(1.0 / r);

    let id = ComplexMatrix::identity(dim);
    let n_p1 = n.matmul(&p1);
    let n_p2 = n.matmul(&p2);
    let p1np1 = p1.matmul(&n_p1);
    let p2np2 = p2.matmul(&n_p2);
    let residual = [
        (&(&p1 + &p2) - &id).frobenius_norm(),
        p1.matmul(&p2).frobenius_norm(),
        if u1.rows() > 0 { unitarity_defect(&u1) } else { 0.0 },
        if u2.rows() > 0 { unitarity_defect(&u2) } else { 0.0 },
        n_p1.distance(&p1np1),
        n_p2.distance(&p2np2),
        n.distance(&(&p1np1 + &p2np2)),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let spec = ContourSpec::new((1.0 - r) / 4.0, crate::calculus::DEFAULT_NODES)?;
    let riesz = riesz_projection(n, r, SpectralPart::Outer, spec, tol)?;
    let riesz_defect = riesz.distance(&p1);
    Ok(ArUnitaryDecomposition { p1, p2, u1, u2, residual, riesz_defect, q1, q2 })
}

/// Projector onto the common kernel of `(I - S^n* S^n)` and `(I - S^n S^n*)`
/// for `n = 1..=n_max`.
fn norm_preserving_subspace(s: &ComplexMatrix, n_max: usize, tol: &Tolerances) -> Result<ComplexMatrix> {
    let dim = s.rows();
    let id = ComplexMatrix::identity(dim);
    let mut gram = ComplexMatrix::zeros(dim, dim);
    for k in 1..=n_max {
        let p = matrix_power(s, k);
        for defect in [&id - &p.adjoint().matmul(&p), &id - &p.matmul(&p.adjoint())] {
            gram = &gram + &defect.matmul(&defect);
        }
    }
    let (vals, q) = eigh(&gram)?;
    let cutoff = tol.rank_tol * vals.first().copied().unwrap_or(0.0).max(1.0);
    let keep: Vec<usize> = (0..dim).filter(|&j| vals[j] <= cutoff).collect();
    let basis = ComplexMatrix::from_fn(dim, keep.len(), |i, j| q[(i, keep[j])]);
    Ok(basis.matmul(&basis.adjoint()))
}

/// Projectors onto the vectors on which `N^n` (resp. `(rN^-1)^n`) and its
/// adjoint preserve norms for `1 <= n <= n_max`.
pub fn membership_subspaces(
    n: &ComplexMatrix,
    r: f64,
    n_max: usize,
    tol: &Tolerances,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    check_radius(r)?;
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    if !is_ar_unitary(n, r, tol)? {
        return Err(Error::NotArUnitary("membership subspaces need an annulus unitary".into()));
    }
    let s = inverse(n, tol).map_err(|_| Error::NotArUnitary("matrix is singular".into()))?.scale_real(r);
    Ok((norm_preserving_subspace(n, n_max, tol)?, norm_preserving_subspace(&s, n_max, tol)?))
}

/// A random annulus unitary `Q diag(U1, r U2) Q*` together with its parts.
#[derive(Debug, Clone)]
pub struct ArUnitaryInstance {
    pub n: ComplexMatrix,
    pub q: ComplexMatrix,
    pub u1: ComplexMatrix,
    pub u2: ComplexMatrix,
}

impl ArUnitaryInstance {
    /// `Q diag(I, 0) Q*`.
    pub fn p1(&self) -> ComplexMatrix {
        let k = self.u1.rows();
        let q1 = self.q.columns(0..k);
        q1.matmul(&q1.adjoint())
    }

    pub fn p2(&self) -> ComplexMatrix {
        let k = self.u1.rows();
        let q2 = self.q.columns(k..self.q.cols());
        q2.matmul(&q2.adjoint())
    }
}

pub fn random_ar_unitary(n1: usize, n2: usize, r: f64, rng: &mut SeededRng) -> Result<ArUnitaryInstance> {
    check_radius(r)?;
    let u1 = random_unitary_with(n1, rng);
    let u2 = random_unitary_with(n2, rng);
    let q = random_unitary_with(n1 + n2, rng);
    let block = ComplexMatrix::block_diag(&[&u1, &u2.scale_real(r)]);
    let n = q.matmul(&block).matmul(&q.adjoint());
    Ok(ArUnitaryInstance { n, q, u1, u2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::example_matrix;
    use crate::linalg::{random_unitary, seeded_rng, C64};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn recognition_examples() {
        let r = 0.5;
        let n = ComplexMatrix::from_diag(&[C64::new(1.0, 0.0), C64::new(0.0, r)]);
        assert!(is_ar_unitary(&n, r, &tol()).unwrap());
        assert!(!is_ar_unitary(&ComplexMatrix::from_real_diag(&[0.7]), r, &tol()).unwrap());
        assert!(!is_ar_unitary(&example_matrix(r), r, &tol()).unwrap());
    }

    #[test]
    fn construction_examples() {
        let n = make_ar_unitary(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3), 0.5, &tol()).unwrap();
        assert_eq!(n, ComplexMatrix::from_real_diag(&[1.0, 1.0, 0.5, 0.5, 0.5]));
        let u1 = random_unitary(3, 1);
        assert_eq!(make_ar_unitary(&u1, &ComplexMatrix::zeros(0, 0), 0.5, &tol()).unwrap(), u1);
        let n = make_ar_unitary(&u1, &random_unitary(2, 2), 0.3, &tol()).unwrap();
        assert!(is_ar_unitary(&n, 0.3, &tol()).unwrap());
        let bad = ComplexMatrix::identity(2).scale_real(0.9);
        assert!(matches!(make_ar_unitary(&bad, &u1, 0.3, &tol()), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn decompose_examples() {
        let r = 0.4;
        let u = random_unitary(3, 6);
        let d = decompose(&u, r, &tol()).unwrap();
        assert!(d.p1.distance(&ComplexMatrix::identity(3)) < 1e-12);
        assert_eq!(d.p2.cols(), 3);
        assert!(d.p2.frobenius_norm() < 1e-12);
        let d = decompose(&u.scale_real(r), r, &tol()).unwrap();
        assert!(d.p2.distance(&ComplexMatrix::identity(3)) < 1e-12);

        let inst = random_ar_unitary(3, 2, r, &mut seeded_rng(44)).unwrap();
        let d = decompose(&inst.n, r, &tol()).unwrap();
        assert!(d.p1.distance(&inst.p1()) < 1e-10);
        assert!(d.p2.distance(&inst.p2()) < 1e-10);
        assert!(d.residual < 1e-10);
        assert!(d.riesz_defect < 1e-9);
        assert!(matches!(decompose(&example_matrix(r), r, &tol()), Err(Error::NotArUnitary(_))));
        let json = serde_json::to_value(&d).unwrap();
        assert!(json.get("P1").is_some() && json.get("U2").is_some());
    }

    #[test]
    fn membership_examples() {
        let r = 0.6;
        let u = random_unitary(3, 9);
        let (p1, p2) = membership_subspaces(&u, r, 2, &tol()).unwrap();
        assert!(p1.distance(&ComplexMatrix::identity(3)) < 1e-12);
        assert!(p2.frobenius_norm() < 1e-12);
        let (p1, p2) = membership_subspaces(&u.scale_real(r), r, 2, &tol()).unwrap();
        assert!(p2.distance(&ComplexMatrix::identity(3)) < 1e-12);
        assert!(p1.frobenius_norm() < 1e-12);
        let inst = random_ar_unitary(2, 3, r, &mut seeded_rng(5)).unwrap();
        let (p1, p2) = membership_subspaces(&inst.n, r, 2, &tol()).unwrap();
        let d = decompose(&inst.n, r, &tol()).unwrap();
        assert!(p1.distance(&d.p1) < 1e-9);
        assert!(p2.distance(&d.p2) < 1e-9);
    }
}
