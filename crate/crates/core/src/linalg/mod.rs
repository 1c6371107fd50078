//! Dense complex linear algebra: factorizations, norms, solves and seeded
//! random generators.

mod eig;
mod matrix;
mod random;

pub use eig::{eig_normal, eigenvalues, eigh, schur, EigDecomposition, Schur};
pub use matrix::{inner, vec_norm, ComplexMatrix, C64, ONE, ZERO};
pub use random::{
    complex_gaussian, gaussian_matrix, random_isometry, random_unitary, random_unitary_with, seeded_rng,
    sub_seed, SeededRng,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical tolerances; all dimensionless and strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub eig_tol: f64,
    pub norm_tol: f64,
    pub rank_tol: f64,
    pub verify_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eig_tol: 1e-10, norm_tol: 1e-12, rank_tol: 1e-9, verify_tol: 1e-8 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [self.eig_tol, self.norm_tol, self.rank_tol, self.verify_tol];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidInput("tolerances must be strictly positive".into()))
        }
    }
}

/// Largest singular value.
///
/// Computed from the Hermitian eigensolve of the smaller Gram matrix, then
/// refined as `||A v||` for the leading right singular vector.
pub fn operator_norm(a: &ComplexMatrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    if a.rows() == 1 || a.cols() == 1 {
        return a.frobenius_norm();
    }
    let (m, left) = if a.cols() <= a.rows() {
        (a.adjoint().matmul(a), false)
    } else {
        (a.matmul(&a.adjoint()), true)
    };
    match eigh(&m) {
        Ok((vals, vecs)) => {
            let v = vecs.column(0);
            let refined = if left { vec_norm(&a.adjoint().matvec(&v)) } else { vec_norm(&a.matvec(&v)) };
            refined.max(vals[0].max(0.0).sqrt() * (1.0 - 4.0 * f64::EPSILON))
        }
        // Frobenius norm is a valid (loose) upper bound if the eigensolve stalls.
        Err(_) => a.frobenius_norm(),
    }
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: ComplexMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &ComplexMatrix, rank_tol: f64) -> Result<Self> {
        let n = a.require_square()?;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| lu[(i, k)].norm().total_cmp(&lu[(j, k)].norm())).unwrap();
            let pivot = lu[(p, k)].norm();
            if pivot <= rank_tol * scale || pivot == 0.0 {
                return Err(Error::Singular { pivot: if scale > 0.0 { pivot / scale } else { 0.0 } });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let inv = lu[(k, k)].inv();
            for i in k + 1..n {
                let factor = lu[(i, k)] * inv;
                lu[(i, k)] = factor;
                if factor != ZERO {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= factor * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.lu.rows();
        if b.rows() != n {
            return Err(Error::DimensionMismatch(format!("rhs has {} rows, expected {n}", b.rows())));
        }
        let m = b.cols();
        let mut x = ComplexMatrix::from_fn(n, m, |i, j| b[(self.perm[i], j)]);
        for c in 0..m {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.lu[(i, i)];
            }
        }
        Ok(x)
    }
}

/// Solves `A X = B`.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    if a.rows() != b.rows() || !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "solve with {}x{} system and {}x{} rhs",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Lu::new(a, tol.rank_tol)?.solve(b)
}

pub fn inverse(a: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    let n = a.require_square()?;
    solve(a, &ComplexMatrix::identity(n), tol)
}

/// Two-pass modified Gram-Schmidt on already (nearly) independent columns.
pub fn orthonormalize_columns(cols: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(cols.len());
    for c in cols {
        let mut v = c.clone();
        for _ in 0..2 {
            for q in &out {
                let proj = inner(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let nrm = vec_norm(&v);
        if nrm > 0.0 {
            for vi in v.iter_mut() {
                *vi /= nrm;
            }
        }
        out.push(v);
    }
    out
}

/// Orthonormal basis for the span of `cols`, dropping directions whose
/// residual after projection falls at or below `drop_tol` (absolute).
pub fn orthonormal_basis(cols: &[Vec<C64>], existing: &[Vec<C64>], drop_tol: f64) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = existing.to_vec();
    let start = basis.len();
    for c in cols {
        let mut v = c.clone();
        for _ in 0..2 {
            for q in &basis {
                let proj = inner(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let nrm = vec_norm(&v);
        if nrm > drop_tol {
            for vi in v.iter_mut() {
                *vi /= nrm;
            }
            basis.push(v);
        }
    }
    basis.split_off(start)
}

/// Thin QR by two-pass modified Gram-Schmidt. The diagonal of `R` is real
/// and positive, which fixes the phases of `Q`.
pub fn qr_thin(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let (m, n) = (a.rows(), a.cols());
    let mut q = ComplexMatrix::zeros(m, n);
    let mut r = ComplexMatrix::zeros(n, n);
    let mut qs: Vec<Vec<C64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = a.column(j);
        for _ in 0..2 {
            for (k, qk) in qs.iter().enumerate() {
                let proj = inner(qk, &v);
                r[(k, j)] += proj;
                for (vi, qi) in v.iter_mut().zip(qk) {
                    *vi -= proj * qi;
                }
            }
        }
        let nrm = vec_norm(&v);
        r[(j, j)] = C64::new(nrm, 0.0);
        if nrm > 0.0 {
            for vi in v.iter_mut() {
                *vi /= nrm;
            }
        }
        q.set_column(j, &v);
        qs.push(v);
    }
    (q, r)
}

/// `||A* A - I||` in Frobenius norm.
pub fn isometry_defect(v: &ComplexMatrix) -> f64 {
    (&v.adjoint().matmul(v) - &ComplexMatrix::identity(v.cols())).frobenius_norm()
}

/// `max(||U*U - I||, ||UU* - I||)` in Frobenius norm.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    isometry_defect(u).max(isometry_defect(&u.adjoint()))
}

/// Extends `k` orthonormal columns in dimension `n` to an `n x n` unitary
/// whose leading `k` columns are exactly the input.
pub fn unitary_completion(v: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    let (n, k) = (v.rows(), v.cols());
    let defect = isometry_defect(v);
    if k > n || defect > tol.rank_tol {
        return Err(Error::NotIsometric { defect });
    }
    let mut basis: Vec<Vec<C64>> = (0..k).map(|j| v.column(j)).collect();
    while basis.len() < n {
        // greedy: the standard basis vector with the largest residual
        let mut best: Option<(f64, Vec<C64>)> = None;
        for i in 0..n {
            let mut e = vec![ZERO; n];
            e[i] = ONE;
            for _ in 0..2 {
                for q in &basis {
                    let proj = inner(q, &e);
                    for (ei, qi) in e.iter_mut().zip(q) {
                        *ei -= proj * qi;
                    }
                }
            }
            let nrm = vec_norm(&e);
            if best.as_ref().is_none_or(|(b, _)| nrm > *b) {
                best = Some((nrm, e));
            }
        }
        let (nrm, mut e) = best.expect("n > 0");
        for ei in e.iter_mut() {
            *ei /= nrm;
        }
        basis.push(e);
    }
    let mut u = ComplexMatrix::from_columns(n, &basis);
    u.set_block(0, 0, v);
    Ok(u)
}

/// Principal square root of a Hermitian positive semidefinite matrix.
/// Eigenvalues within `16 n eps max(1, lambda_max)` of zero, and negative
/// ones down to `-rank_tol * max(1, lambda_max)`, are treated as zero;
/// anything more negative is rejected.
pub fn sqrt_psd(h: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    let n = h.require_square()?;
    let (vals, q) = eigh(h)?;
    let floor = -tol.rank_tol * vals.first().copied().unwrap_or(0.0).max(1.0);
    if let Some(&worst) = vals.last() {
        if worst < floor {
            return Err(Error::InvalidInput(format!("matrix is not positive semidefinite (eigenvalue {worst:.3e})")));
        }
    }
    // eigenvalues at rounding level are zero; their square roots would not be
    let noise = 16.0 * n.max(1) as f64 * f64::EPSILON * vals.first().copied().unwrap_or(0.0).max(1.0);
    let roots: Vec<C64> = vals.iter().map(|&l| C64::new(if l <= noise { 0.0 } else { l.sqrt() }, 0.0)).collect();
    let scaled = ComplexMatrix::from_fn(n, n, |i, j| q[(i, j)] * roots[j]);
    let out = scaled.matmul(&q.adjoint());
    Ok((&out + &out.adjoint()).scale_real(0.5))
}

/// Defect operator `(I - A*A)^{1/2}` of a contraction. Norms up to
/// `1 + verify_tol` are accepted and their negative defect clamped to zero.
pub fn defect_operator(a: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    let n = a.require_square()?;
    let norm = operator_norm(a);
    if norm > 1.0 + tol.verify_tol {
        return Err(Error::NotContraction { norm });
    }
    let relaxed = Tolerances { rank_tol: tol.rank_tol.max(3.0 * tol.verify_tol), ..*tol };
    sqrt_psd(&(&ComplexMatrix::identity(n) - &a.adjoint().matmul(a)), &relaxed)
}

/// Integer power by repeated multiplication.
pub fn matrix_power(a: &ComplexMatrix, k: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::identity(a.rows());
    for _ in 0..k {
        out = a.matmul(&out);
    }
    out
}
