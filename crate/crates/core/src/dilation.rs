//! Power dilations and the two-carrier model.
//!
//! `ando_pair` builds commuting isometric dilations of a commuting pair of
//! contractions on `K0 = H (+) (H^4)^M`, with the shift truncated after `M`
//! blocks. Slot 0 of any word in the two isometries depends only on slot 0
//! of the input, so compressions to `H` reproduce the words in `T1, T2`.
//! `build_model` feeds `(T, rT^-1)` through it and assembles the annulus
//! unitary carrier `N`, the flip `F` and the embedding `V`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calculus::eval_direct;
use crate::classes::double_contraction_check;
use crate::error::{Error, Result};
use crate::linalg::{
    defect_operator, eigh, inverse, operator_norm, orthonormalize_columns, unitarity_defect, unitary_completion,
    ComplexMatrix, Tolerances, C64, ZERO,
};
use crate::rational::{order_for_tolerance, AnnulusRational};
use crate::VERSION;

/// Finite power dilation of a contraction: `U` unitary on `H^(d+1)` with
/// `embed* U^n embed = T^n` for `0 <= n <= d`. A unitary `T` is returned
/// as its own dilation.
pub fn egervary_dilation(t: &ComplexMatrix, d: usize, tol: &Tolerances) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = t.require_square()?;
    if d == 0 {
        return Err(Error::InvalidInput("dilation degree must be at least 1".into()));
    }
    let norm = operator_norm(t);
    if norm > 1.0 + tol.verify_tol {
        return Err(Error::NotContraction { norm });
    }
    if n > 0 && unitarity_defect(t) <= tol.norm_tol {
        return Ok((t.clone(), ComplexMatrix::identity(n)));
    }
    let d_t = defect_operator(t, tol)?;
    let d_tstar = defect_operator(&t.adjoint(), tol)?;
    let blocks = d + 1;
    let mut u = ComplexMatrix::zeros(n * blocks, n * blocks);
    u.set_block(0, 0, t);
    u.set_block(0, n * d, &d_tstar);
    u.set_block(n, 0, &d_t);
    u.set_block(n, n * d, &(-&t.adjoint()));
    let id = ComplexMatrix::identity(n);
    for i in 2..blocks {
        u.set_block(n * i, n * (i - 1), &id);
    }
    Ok((u, embedding(n, n * blocks)))
}

/// `dim x n` isometry onto the first `n` coordinates.
fn embedding(n: usize, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { ZERO })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    V1,
    V2,
}

/// Truncated commuting isometric dilation of a commuting pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AndoPair {
    pub t1: ComplexMatrix,
    pub t2: ComplexMatrix,
    pub d1: ComplexMatrix,
    pub d2: ComplexMatrix,
    /// Unitary on `H^4` taking `(D1T2h, 0, D2h, 0)` to `(D2T1h, 0, D1h, 0)`.
    pub g: ComplexMatrix,
    pub g_adj: ComplexMatrix,
    /// Number of `H^4` blocks.
    pub m: usize,
    /// Largest `||G X12 - X21||` over unit `h`, in Frobenius norm.
    pub fixup_defect: f64,
}

impl AndoPair {
    pub fn dim_h(&self) -> usize {
        self.t1.rows()
    }

    /// Degree budget `M - 1`.
    pub fn budget(&self) -> usize {
        self.m - 1
    }

    /// `n (1 + 4M)`.
    pub fn dim(&self) -> usize {
        self.dim_h() * (1 + 4 * self.m)
    }

    fn slots(&self) -> usize {
        1 + 4 * self.m
    }

    /// `(h0, h1, ...) -> (T h0, D h0, 0, h1, h2, ...)`, dropping the last two slots.
    fn apply_w(&self, t: &ComplexMatrix, d: &ComplexMatrix, x: &[C64]) -> Vec<C64> {
        let n = self.dim_h();
        let mut out = vec![ZERO; x.len()];
        let h0 = &x[..n];
        out[..n].copy_from_slice(&t.matvec(h0));
        out[n..2 * n].copy_from_slice(&d.matvec(h0));
        let slots = self.slots();
        out[3 * n..slots * n].copy_from_slice(&x[n..(slots - 2) * n]);
        out
    }

    fn apply_w_adj(&self, t: &ComplexMatrix, d: &ComplexMatrix, y: &[C64]) -> Vec<C64> {
        let n = self.dim_h();
        let slots = self.slots();
        let mut out = vec![ZERO; y.len()];
        let a = t.adjoint().matvec(&y[..n]);
        let b = d.adjoint().matvec(&y[n..2 * n]);
        for i in 0..n {
            out[i] = a[i] + b[i];
        }
        out[n..(slots - 2) * n].copy_from_slice(&y[3 * n..slots * n]);
        out
    }

    /// `I (+) G (+) ... (+) G`, or its adjoint.
    fn apply_g(&self, x: &[C64], adjoint: bool) -> Vec<C64> {
        let n = self.dim_h();
        let g = if adjoint { &self.g_adj } else { &self.g };
        let mut out = x.to_vec();
        for b in 0..self.m {
            let start = n + 4 * n * b;
            let slice = &x[start..start + 4 * n];
            if slice.iter().all(|z| *z == ZERO) {
                continue;
            }
            let block = g.matvec(slice);
            out[start..start + 4 * n].copy_from_slice(&block);
        }
        out
    }

    pub fn apply_v1(&self, x: &[C64]) -> Vec<C64> {
        self.apply_g(&self.apply_w(&self.t1, &self.d1, x), false)
    }

    pub fn apply_v1_adj(&self, x: &[C64]) -> Vec<C64> {
        self.apply_w_adj(&self.t1, &self.d1, &self.apply_g(x, true))
    }

    pub fn apply_v2(&self, x: &[C64]) -> Vec<C64> {
        self.apply_w(&self.t2, &self.d2, &self.apply_g(x, true))
    }

    pub fn apply_v2_adj(&self, x: &[C64]) -> Vec<C64> {
        self.apply_g(&self.apply_w_adj(&self.t2, &self.d2, x), false)
    }

    pub fn apply(&self, letter: Letter, x: &[C64]) -> Vec<C64> {
        match letter {
            Letter::V1 => self.apply_v1(x),
            Letter::V2 => self.apply_v2(x),
        }
    }

    fn materialize(&self, op: impl Fn(&[C64]) -> Vec<C64>) -> ComplexMatrix {
        let k = self.dim();
        let cols: Vec<Vec<C64>> = (0..k)
            .map(|j| {
                let mut e = vec![ZERO; k];
                e[j] = C64::new(1.0, 0.0);
                op(&e)
            })
            .collect();
        ComplexMatrix::from_columns(k, &cols)
    }

    pub fn v1(&self) -> ComplexMatrix {
        self.materialize(|x| self.apply_v1(x))
    }

    pub fn v2(&self) -> ComplexMatrix {
        self.materialize(|x| self.apply_v2(x))
    }

    /// Isometric embedding of `H` as slot 0.
    pub fn embed(&self) -> ComplexMatrix {
        embedding(self.dim_h(), self.dim())
    }

    /// Columns `embed e_j`.
    pub fn embedded_basis(&self) -> Vec<Vec<C64>> {
        let (n, k) = (self.dim_h(), self.dim());
        (0..n)
            .map(|j| {
                let mut e = vec![ZERO; k];
                e[j] = C64::new(1.0, 0.0);
                e
            })
            .collect()
    }

    /// Coordinate vectors supported in slot 0 and the first `blocks` blocks.
    fn budget_basis(&self, blocks: usize) -> Vec<Vec<C64>> {
        let k = self.dim();
        let count = self.dim_h() * (1 + 4 * blocks.min(self.m));
        (0..count)
            .map(|j| {
                let mut e = vec![ZERO; k];
                e[j] = C64::new(1.0, 0.0);
                e
            })
            .collect()
    }

    /// `max ||V_j* V_j x - x||` over `x` supported in blocks `0..M-1`, as an
    /// operator norm.
    pub fn isometry_defect_on_budget(&self) -> f64 {
        let basis = self.budget_basis(self.m - 1);
        let k = self.dim();
        let mut worst = 0.0f64;
        for letter in [Letter::V1, Letter::V2] {
            let cols: Vec<Vec<C64>> = basis
                .iter()
                .map(|e| {
                    let y = self.apply(letter, e);
                    let z = match letter {
                        Letter::V1 => self.apply_v1_adj(&y),
                        Letter::V2 => self.apply_v2_adj(&y),
                    };
                    z.iter().zip(e).map(|(a, b)| a - b).collect()
                })
                .collect();
            worst = worst.max(operator_norm(&ComplexMatrix::from_columns(k, &cols)));
        }
        worst
    }

    /// Norm of `V1V2 - V2V1` restricted to vectors supported in blocks `0..=blocks`.
    pub fn commutator_on_blocks(&self, blocks: usize) -> f64 {
        let basis = self.budget_basis(blocks);
        let k = self.dim();
        let cols: Vec<Vec<C64>> = basis
            .iter()
            .map(|e| {
                let a = self.apply_v1(&self.apply_v2(e));
                let b = self.apply_v2(&self.apply_v1(e));
                a.iter().zip(&b).map(|(x, y)| x - y).collect()
            })
            .collect();
        operator_norm(&ComplexMatrix::from_columns(k, &cols))
    }

    /// Largest `||embed* w(V1, V2) embed - w(T1, T2)||` over all words of
    /// length at most `max_degree`.
    pub fn word_moment_residual(&self, max_degree: usize) -> f64 {
        let n = self.dim_h();
        let start_big = self.embedded_basis();
        let start_small: Vec<Vec<C64>> = (0..n)
            .map(|j| {
                let mut e = vec![ZERO; n];
                e[j] = C64::new(1.0, 0.0);
                e
            })
            .collect();
        let mut worst = 0.0f64;
        self.word_dfs(&start_big, &start_small, max_degree, &mut worst);
        worst
    }

    fn word_dfs(&self, big: &[Vec<C64>], small: &[Vec<C64>], depth: usize, worst: &mut f64) {
        let n = self.dim_h();
        let compressed = ComplexMatrix::from_columns(n, &big.iter().map(|v| v[..n].to_vec()).collect::<Vec<_>>());
        let exact = ComplexMatrix::from_columns(n, small);
        *worst = worst.max(operator_norm(&(&compressed - &exact)));
        if depth == 0 {
            return;
        }
        for (letter, t) in [(Letter::V1, &self.t1), (Letter::V2, &self.t2)] {
            let nb: Vec<Vec<C64>> = big.iter().map(|v| self.apply(letter, v)).collect();
            let ns: Vec<Vec<C64>> = small.iter().map(|v| t.matvec(v)).collect();
            self.word_dfs(&nb, &ns, depth - 1, worst);
        }
    }
}

/// Unitary `G` on `H^4` with `G X12 h = X21 h`, where
/// `X12 h = (D1T2h, 0, D2h, 0)` and `X21 h = (D2T1h, 0, D1h, 0)`.
fn fixup_unitary(
    t1: &ComplexMatrix,
    t2: &ComplexMatrix,
    d1: &ComplexMatrix,
    d2: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<(ComplexMatrix, f64)> {
    let n = t1.rows();
    let stack = |top: &ComplexMatrix, third: &ComplexMatrix| {
        let mut a = ComplexMatrix::zeros(4 * n, n);
        a.set_block(0, 0, top);
        a.set_block(2 * n, 0, third);
        a
    };
    let a = stack(&d1.matmul(t2), d2);
    let b = stack(&d2.matmul(t1), d1);
    let gram = a.adjoint().matmul(&a);
    let (vals, vecs) = eigh(&gram)?;
    let cutoff = tol.rank_tol * vals.first().copied().unwrap_or(0.0).max(1.0);
    let mut ua = Vec::new();
    let mut ub = Vec::new();
    for (j, &l) in vals.iter().enumerate() {
        if l <= cutoff {
            continue;
        }
        let v = vecs.column(j);
        let s = 1.0 / l.sqrt();
        ua.push(a.matvec(&v).into_iter().map(|z| z * s).collect::<Vec<_>>());
        ub.push(b.matvec(&v).into_iter().map(|z| z * s).collect::<Vec<_>>());
    }
    let g = if ua.is_empty() {
        ComplexMatrix::identity(4 * n)
    } else {
        let qa = ComplexMatrix::from_columns(4 * n, &orthonormalize_columns(&ua));
        let qb = ComplexMatrix::from_columns(4 * n, &orthonormalize_columns(&ub));
        let ca = unitary_completion(&qa, tol)?;
        let cb = unitary_completion(&qb, tol)?;
        cb.matmul(&ca.adjoint())
    };
    let defect = (&g.matmul(&a) - &b).frobenius_norm();
    Ok((g, defect))
}

/// Commuting isometric dilation of `(T1, T2)` truncated after `m` blocks.
pub fn ando_pair(t1: &ComplexMatrix, t2: &ComplexMatrix, m: usize, tol: &Tolerances) -> Result<AndoPair> {
    let n = t1.require_square()?;
    if t2.rows() != n || t2.cols() != n {
        return Err(Error::DimensionMismatch(format!("pair of sizes {n} and {}x{}", t2.rows(), t2.cols())));
    }
    if m < 2 {
        return Err(Error::InvalidInput(format!("block depth must be at least 2, got {m}")));
    }
    let commutator = (&t1.matmul(t2) - &t2.matmul(t1)).frobenius_norm();
    if commutator > tol.verify_tol * operator_norm(t1).max(1.0) * operator_norm(t2).max(1.0) {
        return Err(Error::NotCommuting { commutator });
    }
    let d1 = defect_operator(t1, tol)?;
    let d2 = defect_operator(t2, tol)?;
    let (g, fixup_defect) = fixup_unitary(t1, t2, &d1, &d2, tol)?;
    let g_adj = g.adjoint();
    Ok(AndoPair { t1: t1.clone(), t2: t2.clone(), d1, d2, g, g_adj, m, fixup_defect })
}

/// Bounds on the series truncation used by the model verifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub d: usize,
    /// `max(1, ||T||, ||rT^-1||)`.
    pub gamma: f64,
    /// `sum_{n > d} |q_{n1}| gamma^n`.
    pub q1_tail: f64,
    /// `sum_n |q_{n1}| gamma^n`.
    pub q1_total: f64,
    /// `sum_{n > d} |q_{n2}| (gamma / r)^n`.
    pub q2_tail: f64,
    pub q2_total: f64,
    /// `sum_k |p_k| gamma^k / |scale|`.
    pub p_norm: f64,
    /// Bound on `||f(T) - p(T) S1(T) S2(T^-1) / scale||` for the truncated
    /// series `S1`, `S2`.
    pub bound: f64,
}

/// Tail bound of the degree-`d` truncation of `1/q1` and `1/q2` for `T`.
pub fn tail_report(f: &AnnulusRational, t: &ComplexMatrix, d: usize, tol: &Tolerances) -> Result<TailReport> {
    f.validate()?;
    let norm_t = operator_norm(t);
    let norm_inv = f.r * operator_norm(&inverse(t, tol).map_err(|_| Error::NotInvertible)?);
    let gamma = norm_t.max(norm_inv).max(1.0);
    let p_norm = f.p.iter().enumerate().map(|(k, c)| c.norm() * gamma.powi(k as i32)).sum::<f64>() / f.scale.norm();
    let denominators = AnnulusRational { p: vec![C64::new(1.0, 0.0)], scale: C64::new(1.0, 0.0), ..f.clone() };
    Ok(match denominators.factor_tails(d, gamma, f.r / gamma) {
        Ok(ft) => TailReport {
            d,
            gamma,
            q1_tail: ft.a_tail,
            q1_total: ft.a_total,
            q2_tail: ft.b_tail,
            q2_total: ft.b_total,
            p_norm,
            bound: p_norm * ft.product_bound(),
        },
        Err(_) => TailReport {
            d,
            gamma,
            q1_tail: f64::INFINITY,
            q1_total: f64::INFINITY,
            q2_tail: f64::INFINITY,
            q2_total: f64::INFINITY,
            p_norm,
            bound: f64::INFINITY,
        },
    })
}

/// Twice the Laurent order whose tail bound reaches `1e-10`, capped at 24.
pub fn default_budget(f: &AnnulusRational, t: &ComplexMatrix, tol: &Tolerances) -> Result<usize> {
    let probe = tail_report(f, t, 0, tol)?;
    let order = order_for_tolerance(f, 1e-10, probe.gamma, f.r / probe.gamma, 200).unwrap_or(12);
    Ok((2 * order).clamp(1, 24))
}

/// `N = diag(U1, U2)` on `K0 (+) K0`, the flip `F` and the embedding `V`.
///
/// `U1` is the first Ando isometry `V1`; `U2` is carried through its
/// inverse `U2^-1 = V2 / r`, so the forward carrier is `diag(V1, r V2*)` and
/// the inverse carrier is `diag(V1*, V2 / r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTriple {
    pub r: f64,
    pub d: usize,
    pub ando: AndoPair,
    pub tail_report: Option<TailReport>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelMeta {
    pub version: String,
    pub r: f64,
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub dim_h: usize,
    pub dim_k: usize,
    pub tail_report: Option<TailReport>,
    pub seed: Option<u64>,
    /// How the second diagonal block of `N.json` relates to the dilation.
    pub carrier: String,
}

impl ModelTriple {
    pub fn dim_h(&self) -> usize {
        self.ando.dim_h()
    }

    pub fn dim_k0(&self) -> usize {
        self.ando.dim()
    }

    pub fn dim_k(&self) -> usize {
        2 * self.dim_k0()
    }

    pub fn apply_flip(&self, x: &[C64]) -> Vec<C64> {
        let k0 = self.dim_k0();
        let mut out = x[k0..].to_vec();
        out.extend_from_slice(&x[..k0]);
        out
    }

    fn apply_halves(
        &self,
        x: &[C64],
        first: impl Fn(&[C64]) -> Vec<C64>,
        second: impl Fn(&[C64]) -> Vec<C64>,
    ) -> Vec<C64> {
        let k0 = self.dim_k0();
        let zero = |v: &[C64]| v.iter().all(|z| *z == ZERO);
        let mut out = if zero(&x[..k0]) { vec![ZERO; k0] } else { first(&x[..k0]) };
        if zero(&x[k0..]) {
            out.extend(std::iter::repeat_n(ZERO, k0));
        } else {
            out.extend(second(&x[k0..]));
        }
        out
    }

    /// `N x = (V1 x1, r V2* x2)`.
    pub fn apply_n(&self, x: &[C64]) -> Vec<C64> {
        self.apply_halves(
            x,
            |v| self.ando.apply_v1(v),
            |v| self.ando.apply_v2_adj(v).into_iter().map(|z| z * self.r).collect(),
        )
    }

    /// `N^-1 x = (V1* x1, V2 x2 / r)`.
    pub fn apply_n_inv(&self, x: &[C64]) -> Vec<C64> {
        self.apply_halves(
            x,
            |v| self.ando.apply_v1_adj(v),
            |v| self.ando.apply_v2(v).into_iter().map(|z| z / self.r).collect(),
        )
    }

    pub fn n_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::block_diag(&[&self.ando.v1(), &self.ando.v2().adjoint().scale_real(self.r)])
    }

    pub fn n_inv_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::block_diag(&[&self.ando.v1().adjoint(), &self.ando.v2().scale_real(1.0 / self.r)])
    }

    /// `[[0, I], [I, 0]]`.
    pub fn flip_matrix(&self) -> ComplexMatrix {
        let k0 = self.dim_k0();
        let mut f = ComplexMatrix::zeros(2 * k0, 2 * k0);
        f.set_block(0, k0, &ComplexMatrix::identity(k0));
        f.set_block(k0, 0, &ComplexMatrix::identity(k0));
        f
    }

    /// `H` into slot 0 of the first summand.
    pub fn v_matrix(&self) -> ComplexMatrix {
        embedding(self.dim_h(), self.dim_k())
    }

    fn embedded(&self, j: usize) -> Vec<C64> {
        let mut e = vec![ZERO; self.dim_k()];
        e[j] = C64::new(1.0, 0.0);
        e
    }

    pub fn meta(&self) -> ModelMeta {
        ModelMeta {
            version: VERSION.to_string(),
            r: self.r,
            d: self.d,
            m: self.ando.m,
            dim_h: self.dim_h(),
            dim_k: self.dim_k(),
            tail_report: self.tail_report,
            seed: self.seed,
            carrier: "N = diag(V1, r V2*); U2^-1 = V2 / r".into(),
        }
    }

    /// Writes `N.json`, `F.json`, `V.json` and `meta.json` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let write = |name: &str, value: &dyn erased::Json| fs::write(dir.join(name), value.to_json());
        write("N.json", &self.n_matrix())?;
        write("F.json", &self.flip_matrix())?;
        write("V.json", &self.v_matrix())?;
        write("meta.json", &self.meta())
    }
}

mod erased {
    pub trait Json {
        fn to_json(&self) -> String;
    }

    impl<T: serde::Serialize> Json for T {
        fn to_json(&self) -> String {
            serde_json::to_string_pretty(self).expect("serializable value")
        }
    }
}

/// Dilation model of `T` with degree budget `d` (block depth `d + 1`).
pub fn build_model(t: &ComplexMatrix, r: f64, d: usize, tol: &Tolerances) -> Result<ModelTriple> {
    if d == 0 {
        return Err(Error::InvalidInput("degree budget must be at least 1".into()));
    }
    if !double_contraction_check(t, r, tol)? {
        let norm = operator_norm(t).max(r * operator_norm(&inverse(t, tol)?));
        return Err(Error::NotContraction { norm });
    }
    let t2 = inverse(t, tol)?.scale_real(r);
    let ando = ando_pair(t, &t2, d + 1, tol)?;
    Ok(ModelTriple { r, d, ando, tail_report: None, seed: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelVerification {
    /// `||f(T) - V* p(N) S1(N) F S2(N^-1) F V||` with truncated series.
    pub residual: f64,
    pub tail: TailReport,
    /// Largest entry of `q2(FNF) x - F q2(N) F x` over the embedded basis.
    pub flip_defect: f64,
    /// For polynomial `f`: `||p(T) - embed* p(U) embed||` through a finite power dilation.
    pub power_dilation_residual: Option<f64>,
    /// `residual <= tail bound + requested`.
    pub passed: bool,
}

/// Verifies `f(T) = V* p(N) q1(N)^-1 q2(FNF)^-1 V` with both inverses
/// expanded to degree `d`, requiring the tail bound to be at most `requested`.
pub fn verify_model(
    model: &ModelTriple,
    t: &ComplexMatrix,
    f: &AnnulusRational,
    requested: f64,
    tol: &Tolerances,
) -> Result<ModelVerification> {
    f.validate()?;
    let n = model.dim_h();
    if t.rows() != n || t.cols() != n {
        return Err(Error::DimensionMismatch(format!("model acts on dimension {n}, matrix is {}x{}", t.rows(), t.cols())));
    }
    if (f.r - model.r).abs() > 0.0 {
        return Err(Error::InvalidInput(format!("function radius {} differs from model radius {}", f.r, model.r)));
    }
    let tail = tail_report(f, t, model.d, tol)?;
    if tail.bound.is_nan() || tail.bound > requested {
        return Err(Error::BudgetExceeded { bound: tail.bound, requested });
    }
    let d = model.d;
    let q1c = f.inverse_q1_coeffs(d);
    let q2c = f.inverse_q2_coeffs(d);
    let axpy = |acc: &mut Vec<C64>, c: C64, v: &[C64]| {
        for (a, b) in acc.iter_mut().zip(v) {
            *a += c * b;
        }
    };
    let mut cols = Vec::with_capacity(n);
    let mut flip_defect = 0.0f64;
    for j in 0..n {
        let x = model.embedded(j);
        // F (sum q_{n2} N^-n) F x
        let mut cur = model.apply_flip(&x);
        let mut acc = vec![ZERO; x.len()];
        for &c in &q2c {
            axpy(&mut acc, c, &cur);
            cur = model.apply_n_inv(&cur);
        }
        let y = model.apply_flip(&acc);
        // sum q_{n2} (F N^-1 F)^n x
        let mut cur = x.clone();
        let mut direct = vec![ZERO; x.len()];
        for &c in &q2c {
            axpy(&mut direct, c, &cur);
            cur = model.apply_flip(&model.apply_n_inv(&model.apply_flip(&cur)));
        }
        flip_defect = flip_defect.max(y.iter().zip(&direct).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
        // sum q_{n1} N^n
        let mut cur = y;
        let mut acc = vec![ZERO; x.len()];
        for &c in &q1c {
            axpy(&mut acc, c, &cur);
            cur = model.apply_n(&cur);
        }
        // p(N) by Horner
        let mut out = vec![ZERO; x.len()];
        for &c in f.p.iter().rev() {
            out = model.apply_n(&out);
            axpy(&mut out, c, &acc);
        }
        let inv_scale = f.scale.inv();
        cols.push(out[..n].iter().map(|z| z * inv_scale).collect::<Vec<_>>());
    }
    let rhs = ComplexMatrix::from_columns(n, &cols);
    let exact = eval_direct(f, t, tol)?;
    let residual = operator_norm(&(&exact - &rhs));
    let power_dilation_residual = if f.is_polynomial() {
        let deg = f.numerator_degree().max(1);
        let (u, embed) = egervary_dilation(t, deg, tol)?;
        let pu = eval_direct(f, &u, tol)?;
        Some(operator_norm(&(&embed.adjoint().matmul(&pu).matmul(&embed) - &exact)))
    } else {
        None
    };
    Ok(ModelVerification {
        residual,
        tail,
        flip_defect,
        power_dilation_residual,
        passed: residual <= tail.bound + requested,
    })
}

/// `||f(T) - V* p(N) q1(N)^-1 F q2(N)^-1 F V||` with the inverses of the
/// truncated carriers taken by dense solves, so no series is cut.
pub fn verify_model_resolvent(model: &ModelTriple, t: &ComplexMatrix, f: &AnnulusRational, tol: &Tolerances) -> Result<f64> {
    f.validate()?;
    let n = model.dim_h();
    let v1 = model.ando.v1();
    let v2r = model.ando.v2().scale_real(1.0 / model.r);
    let k0 = v1.rows();
    let id = ComplexMatrix::identity(k0);
    let mut x = model.ando.embed();
    // 1/q2(z) = z^-L prod 1/(1 - beta z^-1), with z^-1 carried by V2 / r
    for &b in &f.q2_roots {
        x = crate::linalg::solve(&(&id - &v2r.scale(b)), &x, tol)?;
        x = v2r.matmul(&x);
    }
    for &a in &f.q1_roots {
        x = crate::linalg::solve(&v1.shift(-a), &x, tol)?;
    }
    let mut out = ComplexMatrix::zeros(k0, n);
    for &c in f.p.iter().rev() {
        out = &v1.matmul(&out) + &x.scale(c);
    }
    let rhs = out.submatrix(0..n, 0..n).scale(f.scale.inv());
    Ok(operator_norm(&(&eval_direct(f, t, tol)? - &rhs)))
}

/// Largest relative error `||T^j - V* V1^j V|| / max(1, ||T^j||)` and the
/// same for `T^-j` against `r^-j V* V2^j V`, over `0 <= j <= j_max`.
pub fn verify_moments(model: &ModelTriple, t: &ComplexMatrix, j_max: usize, tol: &Tolerances) -> Result<f64> {
    if j_max > model.d {
        return Err(Error::BudgetExceeded { bound: j_max as f64, requested: model.d as f64 });
    }
    let n = model.dim_h();
    let t_inv = inverse(t, tol).map_err(|_| Error::NotInvertible)?;
    let basis = model.ando.embedded_basis();
    let mut pos = basis.clone();
    let mut neg = basis;
    let mut tp = ComplexMatrix::identity(n);
    let mut tn = ComplexMatrix::identity(n);
    let mut worst = 0.0f64;
    for j in 0..=j_max {
        if j > 0 {
            pos = pos.iter().map(|v| model.ando.apply_v1(v)).collect();
            neg = neg.iter().map(|v| model.ando.apply_v2(v)).collect();
            tp = tp.matmul(t);
            tn = tn.matmul(&t_inv);
        }
        let scale = model.r.powi(-(j as i32));
        let cp = ComplexMatrix::from_columns(n, &pos.iter().map(|v| v[..n].to_vec()).collect::<Vec<_>>());
        let cn = ComplexMatrix::from_columns(n, &neg.iter().map(|v| v[..n].to_vec()).collect::<Vec<_>>())
            .scale_real(scale);
        worst = worst.max(operator_norm(&(&tp - &cp)) / operator_norm(&tp).max(1.0));
        worst = worst.max(operator_norm(&(&tn - &cn)) / operator_norm(&tn).max(1.0));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Carrier {
    /// Power dilation of `T` for `f = p / q1`.
    Outer,
    /// Power dilation of `rT^-1` for `f = c / q2`.
    Inner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleCarrierVerification {
    pub carrier: Carrier,
    pub d: usize,
    pub dilation_degree: usize,
    pub residual: f64,
    pub tail_bound: f64,
}

/// Verifies `f(T)` through one finite power dilation when `f` has poles on
/// one side only: `p / q1` through a dilation of `T`, `c / q2` through a
/// dilation of `rT^-1`.
pub fn verify_single_carrier(
    t: &ComplexMatrix,
    f: &AnnulusRational,
    d: usize,
    tol: &Tolerances,
) -> Result<SingleCarrierVerification> {
    f.validate()?;
    let n = t.require_square()?;
    let r = f.r;
    let inner_side = !f.q2_roots.is_empty();
    if inner_side && !f.q1_roots.is_empty() {
        return Err(Error::InvalidInput("single-carrier verification needs poles on one side only".into()));
    }
    if inner_side && f.numerator_degree() > 0 {
        return Err(Error::InvalidInput("the inner carrier needs a constant numerator".into()));
    }
    let tail = tail_report(f, t, d, tol)?;
    let (carrier_op, coeffs, degree) = if inner_side {
        let s = inverse(t, tol).map_err(|_| Error::NotInvertible)?.scale_real(r);
        let coeffs: Vec<C64> = f
            .inverse_q2_coeffs(d)
            .into_iter()
            .enumerate()
            .map(|(k, c)| c * r.powi(-(k as i32)) * f.p[0])
            .collect();
        (s, coeffs, d)
    } else {
        let series = f.inverse_q1_coeffs(d);
        let coeffs = crate::rational::poly_mul(&f.p, &series);
        let degree = coeffs.len() - 1;
        (t.clone(), coeffs, degree)
    };
    let (u, embed) = egervary_dilation(&carrier_op, degree.max(1), tol)?;
    let mut acc = ComplexMatrix::zeros(u.rows(), n);
    for &c in coeffs.iter().rev() {
        acc = &u.matmul(&acc) + &embed.scale(c);
    }
    let value = embed.adjoint().matmul(&acc).scale(f.scale.inv());
    let residual = operator_norm(&(&eval_direct(f, t, tol)? - &value));
    Ok(SingleCarrierVerification {
        carrier: if inner_side { Carrier::Inner } else { Carrier::Outer },
        d,
        dilation_degree: degree.max(1),
        residual,
        tail_bound: tail.bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::random_singular_value_window;
    use crate::linalg::{isometry_defect, matrix_power, random_unitary, seeded_rng};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn egervary_examples() {
        let lambda = ComplexMatrix::from_diag(&[C64::from_polar(1.0, 0.7)]);
        let (u, e) = egervary_dilation(&lambda, 3, &tol()).unwrap();
        assert_eq!(u, lambda);
        assert_eq!(e, ComplexMatrix::identity(1));

        let zero = ComplexMatrix::zeros(1, 1);
        let (u, _) = egervary_dilation(&zero, 2, &tol()).unwrap();
        assert_eq!(u.rows(), 3);
        assert!(unitarity_defect(&u) < 1e-15);
        assert_eq!(matrix_power(&u, 1)[(0, 0)], ZERO);
        assert_eq!(matrix_power(&u, 2)[(0, 0)], ZERO);

        let t = random_singular_value_window(3, 0.3, &mut seeded_rng(2));
        let (u, e) = egervary_dilation(&t, 4, &tol()).unwrap();
        assert!(unitarity_defect(&u) < 1e-12);
        assert!(isometry_defect(&e) == 0.0);
        for k in 0..=4 {
            let got = e.adjoint().matmul(&matrix_power(&u, k)).matmul(&e);
            assert!(got.distance(&matrix_power(&t, k)) < 1e-12);
        }
        assert!(matches!(
            egervary_dilation(&ComplexMatrix::identity(2).scale_real(1.1), 2, &tol()),
            Err(Error::NotContraction { .. })
        ));
    }

    #[test]
    fn ando_scalar_pair() {
        let a = ComplexMatrix::from_real_diag(&[0.6]);
        let b = ComplexMatrix::from_real_diag(&[0.3]);
        let pair = ando_pair(&a, &b, 5, &tol()).unwrap();
        assert!(unitarity_defect(&pair.g) < 1e-13);
        assert!(pair.fixup_defect < 1e-13);
        assert!(pair.word_moment_residual(4) < 1e-12);
        assert!(pair.isometry_defect_on_budget() < 1e-13);
        assert!(pair.commutator_on_blocks(pair.m - 1) < 1e-13);
        // dense materialization agrees with the structured action
        let v1 = pair.v1();
        let v2 = pair.v2();
        let e = pair.embed();
        for m in 0..=2 {
            for k in 0..=2 {
                let w = matrix_power(&v1, m).matmul(&matrix_power(&v2, k));
                let got = e.adjoint().matmul(&w).matmul(&e)[(0, 0)];
                assert!((got - 0.6f64.powi(m as i32) * 0.3f64.powi(k as i32)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ando_unitary_pair() {
        let u = random_unitary(3, 8);
        let pair = ando_pair(&u, &u, 4, &tol()).unwrap();
        assert!(pair.word_moment_residual(3) < 1e-12);
        assert!(pair.commutator_on_blocks(pair.m - 1) < 1e-12);
        let t = ComplexMatrix::identity(2).scale_real(2.0);
        assert!(matches!(ando_pair(&t, &t, 3, &tol()), Err(Error::NotContraction { .. })));
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 0.5], &[0.0, 0.0]]);
        assert!(matches!(ando_pair(&x, &x.adjoint(), 3, &tol()), Err(Error::NotCommuting { .. })));
    }

    #[test]
    fn model_structure() {
        let r = 0.5;
        let t = random_singular_value_window(2, r, &mut seeded_rng(4));
        let model = build_model(&t, r, 2, &tol()).unwrap();
        let f = model.flip_matrix();
        assert_eq!(f, f.adjoint());
        assert_eq!(f.matmul(&f), ComplexMatrix::identity(model.dim_k()));
        let n = model.n_matrix();
        let fnf = f.matmul(&n).matmul(&f);
        let k0 = model.dim_k0();
        assert_eq!(fnf.submatrix(0..k0, 0..k0), n.submatrix(k0..2 * k0, k0..2 * k0));
        assert_eq!(fnf.submatrix(k0..2 * k0, k0..2 * k0), n.submatrix(0..k0, 0..k0));
        assert_eq!(isometry_defect(&model.v_matrix()), 0.0);
        // q2(FNF) = F q2(N) F as dense matrices
        let beta = [c(0.2), C64::new(0.0, -0.1)];
        let q2 = |m: &ComplexMatrix| beta.iter().fold(ComplexMatrix::identity(m.rows()), |acc, &b| acc.matmul(&m.shift(-b)));
        assert_eq!(q2(&fnf), f.matmul(&q2(&n)).matmul(&f));
    }

    #[test]
    fn model_verifies_functions() {
        let r = 0.5;
        let t = random_singular_value_window(2, r, &mut seeded_rng(6));
        let model = build_model(&t, r, 30, &tol()).unwrap();
        let id = AnnulusRational::identity(r).unwrap();
        let v = verify_model(&model, &t, &id, 1e-8, &tol()).unwrap();
        assert!(v.residual < 1e-12 && v.passed);
        assert!(v.power_dilation_residual.unwrap() < 1e-12);
        let f = AnnulusRational::new(r, vec![c(1.0), c(0.5)], vec![c(2.5)], vec![c(0.1), C64::new(0.0, 0.05)], c(2.0))
            .unwrap();
        let v = verify_model(&model, &t, &f, 1e-8, &tol()).unwrap();
        assert!(v.residual <= v.tail.bound + 1e-10, "{v:?}");
        assert_eq!(v.flip_defect, 0.0);
        assert!(verify_model_resolvent(&model, &t, &f, &tol()).unwrap() < 1e-10);
        let short = build_model(&t, r, 2, &tol()).unwrap();
        assert!(matches!(verify_model(&short, &t, &f, 1e-12, &tol()), Err(Error::BudgetExceeded { .. })));
        assert!(verify_moments(&model, &t, 30, &tol()).unwrap() < 1e-10);
        assert_eq!(verify_moments(&model, &t, 0, &tol()).unwrap(), 0.0);
    }

    #[test]
    fn scaled_unitary_moments() {
        let r = 0.4;
        let t = random_unitary(3, 1).scale_real(r);
        let model = build_model(&t, r, 4, &tol()).unwrap();
        assert!(verify_moments(&model, &t, 4, &tol()).unwrap() < 1e-11);
    }

    #[test]
    fn single_carrier_examples() {
        let r = 0.5;
        let t = random_singular_value_window(3, r, &mut seeded_rng(10));
        let g = AnnulusRational::new(r, vec![c(1.0), c(-0.5)], vec![c(1.8), C64::new(0.0, 2.2)], vec![], c(1.0)).unwrap();
        let v = verify_single_carrier(&t, &g, 60, &tol()).unwrap();
        assert_eq!(v.carrier, Carrier::Outer);
        assert!(v.residual < 1e-10, "{v:?}");
        let f = AnnulusRational::new(r, vec![c(1.0)], vec![], vec![c(0.2), C64::new(-0.1, 0.1)], c(1.0)).unwrap();
        let v = verify_single_carrier(&t, &f, 60, &tol()).unwrap();
        assert_eq!(v.carrier, Carrier::Inner);
        assert!(v.residual < 1e-10, "{v:?}");
    }

    #[test]
    fn model_directory() {
        let r = 0.5;
        let t = random_singular_value_window(1, r, &mut seeded_rng(3));
        let model = build_model(&t, r, 2, &tol()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        model.write_dir(dir.path()).unwrap();
        let n: ComplexMatrix = serde_json::from_str(&fs::read_to_string(dir.path().join("N.json")).unwrap()).unwrap();
        assert!(n.distance(&model.n_matrix()) < 1e-14);
        let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("meta.json")).unwrap()).unwrap();
        assert_eq!(meta["M"], 3);
    }
}
