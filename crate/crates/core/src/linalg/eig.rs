//! Complex Schur form by Hessenberg reduction and single-shift QR sweeps,
//! plus the normal and Hermitian eigensolvers built on top of it.

use std::cmp::Ordering;
use std::f64::consts::PI;

use super::matrix::{ComplexMatrix, C64, ZERO};
use super::{orthonormalize_columns, Tolerances};
use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;

/// `A = Q T Q*` with `T` upper triangular and `Q` unitary.
#[derive(Debug, Clone)]
pub struct Schur {
    pub q: ComplexMatrix,
    pub t: ComplexMatrix,
}

impl Schur {
    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.t.rows()).map(|i| self.t[(i, i)]).collect()
    }
}

/// Eigenpairs of a normal matrix.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub q: ComplexMatrix,
    pub lambdas: Vec<C64>,
    pub residual: f64,
}

impl EigDecomposition {
    /// Orthogonal projector onto the span of the selected eigenvectors.
    pub fn projector(&self, select: impl Fn(C64) -> bool) -> ComplexMatrix {
        let basis = self.basis(select);
        basis.matmul(&basis.adjoint())
    }

    /// Eigenvectors whose eigenvalue satisfies `select`, as columns.
    pub fn basis(&self, select: impl Fn(C64) -> bool) -> ComplexMatrix {
        let idx: Vec<usize> = (0..self.lambdas.len()).filter(|&i| select(self.lambdas[i])).collect();
        ComplexMatrix::from_fn(self.q.rows(), idx.len(), |i, j| self.q[(i, idx[j])])
    }
}

fn householder_hessenberg(a: &mut ComplexMatrix, q: &mut ComplexMatrix) {
    let n = a.rows();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let xnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if v[0].norm() > 0.0 { v[0] / v[0].norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * xnorm;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // A <- (I - 2vv*) A
        for j in 0..n {
            let mut s = ZERO;
            for (t, vi) in v.iter().enumerate() {
                s += vi.conj() * a[(k + 1 + t, j)];
            }
            s *= 2.0;
            for (t, vi) in v.iter().enumerate() {
                a[(k + 1 + t, j)] -= vi * s;
            }
        }
        // A <- A (I - 2vv*), Q <- Q (I - 2vv*)
        for m in [&mut *a, &mut *q] {
            for i in 0..n {
                let mut s = ZERO;
                for (t, vi) in v.iter().enumerate() {
                    s += m[(i, k + 1 + t)] * vi;
                }
                s *= 2.0;
                for (t, vi) in v.iter().enumerate() {
                    m[(i, k + 1 + t)] -= s * vi.conj();
                }
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
}

/// Rotation `[[c, s], [-conj(s), c]]` mapping `(x, y)` to `(rho, 0)`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    if y == ZERO {
        return (1.0, ZERO);
    }
    if x == ZERO {
        return (0.0, y.conj() / y.norm());
    }
    let nrm = x.norm().hypot(y.norm());
    let c = x.norm() / nrm;
    let s = (x / x.norm()) * y.conj() / nrm;
    (c, s)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Complex Schur decomposition of a square matrix.
pub fn schur(a: &ComplexMatrix) -> Result<Schur> {
    let n = a.require_square()?;
    let mut h = a.clone();
    let mut q = ComplexMatrix::identity(n);
    if n <= 1 {
        return Ok(Schur { q, t: h });
    }
    householder_hessenberg(&mut h, &mut q);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let max_sweeps = 100 * n;
    let mut sweeps = 0;
    let mut since_deflation = 0;
    let mut hi = n - 1;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let diag = h[(l, l)].norm() + h[(l - 1, l - 1)].norm();
            if sub <= EPS * diag || sub <= EPS * EPS * scale {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        sweeps += 1;
        since_deflation += 1;
        if sweeps > max_sweeps {
            return Err(Error::NoConvergence { iterations: sweeps });
        }
        let mu = if since_deflation % 11 == 10 {
            // exceptional shift breaks symmetric stalls
            h[(hi, hi)] + C64::new(0.75, 0.4375) * h[(hi, hi - 1)].norm()
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for k in l..hi {
            let (x, y) = if k == l {
                (h[(l, l)] - mu, h[(l + 1, l)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s) = givens(x, y);
            for j in 0..n {
                let (u, v) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = u * c + s * v;
                h[(k + 1, j)] = -s.conj() * u + v * c;
            }
            for m in [&mut h, &mut q] {
                for i in 0..n {
                    let (u, v) = (m[(i, k)], m[(i, k + 1)]);
                    m[(i, k)] = u * c + v * s.conj();
                    m[(i, k + 1)] = -s * u + v * c;
                }
            }
            if k > l {
                h[(k + 1, k - 1)] = ZERO;
            }
        }
    }
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok(Schur { q, t: h })
}

/// Eigenvalues of a general square matrix (diagonal of its Schur form).
pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<C64>> {
    Ok(schur(a)?.eigenvalues())
}

fn canonical_arg(z: C64) -> f64 {
    let a = z.arg();
    if a < -PI + 1e-12 {
        PI
    } else {
        a
    }
}

/// Descending modulus, ties (to 1e-9) broken by ascending argument.
pub(crate) fn spectral_order(a: C64, b: C64) -> Ordering {
    let ka = (a.norm() * 1e9).round();
    let kb = (b.norm() * 1e9).round();
    kb.total_cmp(&ka).then(canonical_arg(a).total_cmp(&canonical_arg(b)))
}

/// Eigendecomposition of a normal matrix, `A = Q diag(lambdas) Q*`.
pub fn eig_normal(a: &ComplexMatrix, tol: &Tolerances) -> Result<EigDecomposition> {
    let n = a.require_square()?;
    let norm = a.frobenius_norm();
    let commutator = a.self_commutator().frobenius_norm();
    let bound = tol.eig_tol * norm * norm;
    if commutator > bound && commutator > EPS * EPS {
        return Err(Error::NotNormal { commutator, bound });
    }
    let s = schur(a)?;
    let raw = s.eigenvalues();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| spectral_order(raw[i], raw[j]).then(i.cmp(&j)));
    let lambdas: Vec<C64> = order.iter().map(|&i| raw[i]).collect();
    let cols: Vec<Vec<C64>> = order.iter().map(|&i| s.q.column(i)).collect();
    let q = ComplexMatrix::from_columns(n, &orthonormalize_columns(&cols));
    let residual = eig_residual(a, &q, &lambdas);
    if residual > 10.0 * tol.eig_tol * norm.max(1.0) {
        return Err(Error::NoConvergence { iterations: 0 });
    }
    Ok(EigDecomposition { q, lambdas, residual })
}

fn eig_residual(a: &ComplexMatrix, q: &ComplexMatrix, lambdas: &[C64]) -> f64 {
    let n = q.rows();
    let aq = a.matmul(q);
    let ql = ComplexMatrix::from_fn(n, n, |i, j| q[(i, j)] * lambdas[j]);
    let gram = &q.adjoint().matmul(q) - &ComplexMatrix::identity(n);
    aq.distance(&ql) + gram.frobenius_norm()
}

/// Eigenpairs of a Hermitian matrix, eigenvalues descending.
pub fn eigh(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = a.require_square()?;
    let herm = (a + &a.adjoint()).scale_real(0.5);
    let s = schur(&herm)?;
    let raw: Vec<f64> = s.eigenvalues().iter().map(|z| z.re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw[j].total_cmp(&raw[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| raw[i]).collect();
    let cols: Vec<Vec<C64>> = order.iter().map(|&i| s.q.column(i)).collect();
    Ok((values, ComplexMatrix::from_columns(n, &orthonormalize_columns(&cols))))
}
