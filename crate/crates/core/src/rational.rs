//! Rational functions with poles off the closed annulus, stored in the
//! factored form `f = p / (scale * q1 * q2)` with monic `q1`, `q2`, roots of
//! `q1` outside the closed unit disk and roots of `q2` inside the open disk
//! of radius `r`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{SeededRng, C64, ONE, ZERO};

/// Distance below which an evaluation point counts as a pole.
pub const POLE_EPS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusRational {
    pub r: f64,
    /// Numerator coefficients, ascending powers.
    pub p: Vec<C64>,
    pub q1_roots: Vec<C64>,
    pub q2_roots: Vec<C64>,
    pub scale: C64,
}

pub(crate) fn horner(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
}

pub fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn series_mul(a: &[C64], b: &[C64], order: usize) -> Vec<C64> {
    let mut out = vec![ZERO; order + 1];
    for (i, &x) in a.iter().enumerate().take(order + 1) {
        if x == ZERO {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn real_series_mul(a: &[f64], b: &[f64], order: usize) -> Vec<f64> {
    let mut out = vec![0.0; order + 1];
    for (i, &x) in a.iter().enumerate().take(order + 1) {
        for (j, &y) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Neumaier-compensated sum of nonnegative terms.
fn compensated_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

fn c_to_pair(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

fn pair_to_c(p: &[f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

impl AnnulusRational {
    pub fn new(r: f64, p: Vec<C64>, q1_roots: Vec<C64>, q2_roots: Vec<C64>, scale: C64) -> Result<Self> {
        let f = Self { r, p, q1_roots, q2_roots, scale };
        f.validate()?;
        Ok(f)
    }

    /// Polynomial with the given ascending coefficients.
    pub fn polynomial(r: f64, p: Vec<C64>) -> Result<Self> {
        Self::new(r, p, Vec::new(), Vec::new(), ONE)
    }

    /// `f(z) = z`.
    pub fn identity(r: f64) -> Result<Self> {
        Self::polynomial(r, vec![ZERO, ONE])
    }

    /// `f(z) = 1 / (z - root)`, routed to `q1` or `q2` by the root's modulus.
    pub fn simple_pole(r: f64, root: C64) -> Result<Self> {
        if root.norm() > 1.0 {
            Self::new(r, vec![ONE], vec![root], Vec::new(), ONE)
        } else {
            Self::new(r, vec![ONE], Vec::new(), vec![root], ONE)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::BadRadius(self.r));
        }
        if self.p.is_empty() {
            return Err(Error::InvalidRational("numerator has no coefficients".into()));
        }
        if self.scale == ZERO || !self.scale.is_finite() {
            return Err(Error::InvalidRational("scale must be finite and nonzero".into()));
        }
        if self.p.iter().chain(&self.q1_roots).chain(&self.q2_roots).any(|z| !z.is_finite()) {
            return Err(Error::InvalidRational("non-finite coefficient or root".into()));
        }
        if let Some(a) = self.q1_roots.iter().find(|a| a.norm() <= 1.0) {
            return Err(Error::RootInClosedDisk { root: a.to_string() });
        }
        if let Some(b) = self.q2_roots.iter().find(|b| b.norm() >= self.r) {
            return Err(Error::RootOutsideInnerDisk { root: b.to_string() });
        }
        Ok(())
    }

    pub fn is_polynomial(&self) -> bool {
        self.q1_roots.is_empty() && self.q2_roots.is_empty()
    }

    /// Degree of the numerator after trimming trailing zeros.
    pub fn numerator_degree(&self) -> usize {
        self.p.iter().rposition(|&c| c != ZERO).unwrap_or(0)
    }

    /// `q1(z) = prod (z - alpha_j)`.
    pub fn q1(&self, z: C64) -> C64 {
        self.q1_roots.iter().map(|&a| z - a).product()
    }

    /// `q2(z) = prod (z - beta_i)`.
    pub fn q2(&self, z: C64) -> C64 {
        self.q2_roots.iter().map(|&b| z - b).product()
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        if self.q1_roots.iter().chain(&self.q2_roots).any(|&a| (z - a).norm() <= POLE_EPS) {
            return Err(Error::PoleHit);
        }
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: C64) -> C64 {
        let mut den = self.scale;
        for &a in self.q1_roots.iter().chain(&self.q2_roots) {
            den *= z - a;
        }
        horner(&self.p, z) / den
    }

    /// Largest sampled modulus over `nodes` equispaced points on each
    /// boundary circle. A lower bound on the sup norm over the annulus.
    pub fn boundary_sup_norm(&self, nodes: usize) -> f64 {
        let nodes = nodes.max(64);
        let mut best = 0.0f64;
        for radius in [1.0, self.r] {
            for k in 0..nodes {
                let z = C64::from_polar(radius, 2.0 * PI * k as f64 / nodes as f64);
                best = best.max(self.eval_unchecked(z).norm());
            }
        }
        best
    }

    /// Sampled boundary sup norm with every sampled local maximum polished
    /// by golden-section search on the angle. Still a lower bound, but tight
    /// even when a pole sits close to a boundary circle.
    pub fn refined_sup_norm(&self, nodes: usize) -> f64 {
        let nodes = nodes.max(64);
        let h = 2.0 * PI / nodes as f64;
        let mut best = 0.0f64;
        for radius in [1.0, self.r] {
            let g = |theta: f64| self.eval_unchecked(C64::from_polar(radius, theta)).norm();
            let vals: Vec<f64> = (0..nodes).map(|k| g(h * k as f64)).collect();
            for k in 0..nodes {
                let v = vals[k];
                best = best.max(v);
                let prev = vals[(k + nodes - 1) % nodes];
                let next = vals[(k + 1) % nodes];
                if v >= prev && v >= next {
                    best = best.max(golden_max(&g, h * k as f64 - h, h * k as f64 + h));
                }
            }
        }
        best
    }

    /// `g(z) = f(r / z)` rewritten in the same factored form.
    pub fn involute(&self) -> Result<Self> {
        self.validate()?;
        let r = self.r;
        let deg = self.numerator_degree();
        // p(r/z) = z^-deg * sum_k p_k r^k z^(deg-k)
        let mut reversed = vec![ZERO; deg + 1];
        for (k, &c) in self.p.iter().enumerate().take(deg + 1) {
            reversed[deg - k] = c * r.powi(k as i32);
        }
        let mut scale = self.scale;
        let mut new_q1 = Vec::new();
        let mut new_q2 = Vec::new();
        // (r/z - a) = -a (z - r/a) / z
        for &a in &self.q1_roots {
            scale *= -a;
            new_q2.push(r / a);
        }
        for &b in &self.q2_roots {
            if b == ZERO {
                scale *= r;
            } else {
                scale *= -b;
                new_q1.push(r / b);
            }
        }
        let z_power = (self.q1_roots.len() + self.q2_roots.len()) as i64 - deg as i64;
        let p = if z_power >= 0 {
            let mut p = vec![ZERO; z_power as usize];
            p.extend(reversed);
            p
        } else {
            new_q2.extend(std::iter::repeat_n(ZERO, (-z_power) as usize));
            reversed
        };
        Self::new(r, p, new_q1, new_q2, scale)
    }

    /// Pointwise product, kept in factored form.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.r != other.r {
            return Err(Error::InvalidInput("product of functions on different annuli".into()));
        }
        let mut q1 = self.q1_roots.clone();
        q1.extend(&other.q1_roots);
        let mut q2 = self.q2_roots.clone();
        q2.extend(&other.q2_roots);
        Self::new(self.r, poly_mul(&self.p, &other.p), q1, q2, self.scale * other.scale)
    }

    /// Coefficients of `1/q1(z) = sum q_{n1} z^n` for `n = 0..=order`.
    pub fn inverse_q1_coeffs(&self, order: usize) -> Vec<C64> {
        let mut acc = vec![ZERO; order + 1];
        acc[0] = ONE;
        for &a in &self.q1_roots {
            // 1/(z - a) = -sum z^n / a^(n+1)
            let inv = a.inv();
            let mut factor = Vec::with_capacity(order + 1);
            let mut pw = -inv;
            for _ in 0..=order {
                factor.push(pw);
                pw *= inv;
            }
            acc = series_mul(&acc, &factor, order);
        }
        acc
    }

    /// Coefficients of `1/q2(z) = sum q_{n2} z^-n` for `n = 0..=order`.
    pub fn inverse_q2_coeffs(&self, order: usize) -> Vec<C64> {
        let mut acc = vec![ZERO; order + 1];
        acc[0] = ONE;
        for &b in &self.q2_roots {
            // 1/(z - b) = sum_{n>=1} b^(n-1) z^-n
            let mut factor = vec![ZERO; order + 1];
            let mut pw = ONE;
            for slot in factor.iter_mut().skip(1) {
                *slot = pw;
                pw *= b;
            }
            acc = series_mul(&acc, &factor, order);
        }
        acc
    }

    /// Ascending coefficients `a_n` of `p(z) / (scale * q1(z))`, `n = 0..=order`.
    pub fn positive_factor_coeffs(&self, order: usize) -> Vec<C64> {
        let inv_scale = self.scale.inv();
        series_mul(&self.p, &self.inverse_q1_coeffs(order), order)
            .into_iter()
            .map(|c| c * inv_scale)
            .collect()
    }

    fn min_q1_modulus(&self) -> f64 {
        self.q1_roots.iter().map(|a| a.norm()).fold(f64::INFINITY, f64::min)
    }

    fn max_q2_modulus(&self) -> f64 {
        self.q2_roots.iter().map(|b| b.norm()).fold(0.0, f64::max)
    }

    /// Certified bounds for the two factor series on `inner <= |z| <= outer`.
    pub fn factor_tails(&self, order: usize, outer: f64, inner: f64) -> Result<FactorTails> {
        let min_alpha = self.min_q1_modulus();
        let max_beta = self.max_q2_modulus();
        if outer >= min_alpha {
            return Err(Error::SeriesDivergent(format!(
                "outer radius {outer} reaches a q1 root of modulus {min_alpha}"
            )));
        }
        if inner <= max_beta || inner <= 0.0 {
            return Err(Error::SeriesDivergent(format!(
                "inner radius {inner} reaches a q2 root of modulus {max_beta}"
            )));
        }
        let inv_scale = self.scale.inv().norm();

        // Positive side: A(z) = p(z) / (scale q1(z)), majorant |p|(z) / (|scale| prod (|a| - z)).
        let abs_p: Vec<f64> = self.p.iter().map(|c| c.norm()).collect();
        let (a_total, a_tail) = if self.q1_roots.is_empty() {
            let total = compensated_sum(abs_p.iter().enumerate().map(|(k, c)| c * outer.powi(k as i32))) * inv_scale;
            let tail = compensated_sum(
                abs_p.iter().enumerate().skip(order + 1).map(|(k, c)| c * outer.powi(k as i32)),
            ) * inv_scale;
            (total, tail)
        } else {
            let mut maj = vec![0.0; order + 1];
            maj[0] = 1.0;
            for &a in &self.q1_roots {
                let inv = 1.0 / a.norm();
                let factor: Vec<f64> = (0..=order).map(|n| inv.powi(n as i32 + 1)).collect();
                maj = real_series_mul(&maj, &factor, order);
            }
            let maj = real_series_mul(&abs_p, &maj, order);
            let total = abs_p.iter().enumerate().map(|(k, c)| c * outer.powi(k as i32)).sum::<f64>()
                / self.q1_roots.iter().map(|a| a.norm() - outer).product::<f64>()
                * inv_scale;
            let partial = compensated_sum(maj.iter().enumerate().map(|(n, c)| c * outer.powi(n as i32))) * inv_scale;
            let mut tail = (total - partial).max(0.0);
            if let Some(pf) = self.q1_partial_fraction_tail(order, outer) {
                tail = tail.min(pf);
            }
            (total, tail)
        };

        // Negative side: B(w) = 1/q2 in w = 1/z, majorant prod w / (1 - |b| w) at w = 1/inner.
        let (b_total, b_tail) = if self.q2_roots.is_empty() {
            (1.0, 0.0)
        } else {
            let mut maj = vec![0.0; order + 1];
            maj[0] = 1.0;
            for &b in &self.q2_roots {
                let m = b.norm();
                let mut factor = vec![0.0; order + 1];
                for (n, slot) in factor.iter_mut().enumerate().skip(1) {
                    *slot = m.powi(n as i32 - 1);
                }
                maj = real_series_mul(&maj, &factor, order);
            }
            let total = 1.0 / self.q2_roots.iter().map(|b| inner - b.norm()).product::<f64>();
            let partial = compensated_sum(maj.iter().enumerate().map(|(n, c)| c * inner.powi(-(n as i32))));
            let mut tail = (total - partial).max(0.0);
            if let Some(pf) = self.q2_partial_fraction_tail(order, inner) {
                tail = tail.min(pf);
            }
            (total, tail)
        };
        // First-order rounding of the closed-form totals and the subtractions above.
        let terms = (self.p.len() + self.q1_roots.len() + self.q2_roots.len() + 2) as f64;
        let cancellation = if self.is_polynomial() { 0.0 } else { 4.0 * terms * f64::EPSILON * a_total * b_total };
        Ok(FactorTails { order, a_total, a_tail, b_total, b_tail, cancellation })
    }

    fn has_clustered(roots: &[C64]) -> bool {
        roots.iter().enumerate().any(|(i, a)| {
            roots[i + 1..].iter().any(|b| (a - b).norm() <= CLUSTER_EPS * a.norm().max(1.0))
        })
    }

    /// Residues `c_j` of `p / (scale q1)` at its (simple) poles.
    fn q1_residues(&self) -> Option<Vec<C64>> {
        if Self::has_clustered(&self.q1_roots) {
            return None;
        }
        Some(
            self.q1_roots
                .iter()
                .enumerate()
                .map(|(j, &a)| {
                    let others: C64 =
                        self.q1_roots.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &b)| a - b).product();
                    horner(&self.p, a) / (self.scale * others)
                })
                .collect(),
        )
    }

    /// Residues `d_i` of `1/q2` at its (simple) poles.
    fn q2_residues(&self) -> Option<Vec<C64>> {
        if Self::has_clustered(&self.q2_roots) {
            return None;
        }
        Some(
            self.q2_roots
                .iter()
                .enumerate()
                .map(|(i, &b)| {
                    let others: C64 =
                        self.q2_roots.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &c)| b - c).product();
                    others.inv()
                })
                .collect(),
        )
    }

    fn q1_partial_fraction_tail(&self, order: usize, outer: f64) -> Option<f64> {
        let poly_degree = self.numerator_degree() as i64 - self.q1_roots.len() as i64;
        if (order as i64) < poly_degree {
            return None;
        }
        let res = self.q1_residues()?;
        Some(
            res.iter()
                .zip(&self.q1_roots)
                .map(|(c, a)| {
                    let ratio = outer / a.norm();
                    c.norm() / a.norm() * ratio.powi(order as i32 + 1) / (1.0 - ratio)
                })
                .sum(),
        )
    }

    fn q2_partial_fraction_tail(&self, order: usize, inner: f64) -> Option<f64> {
        let res = self.q2_residues()?;
        Some(
            res.iter()
                .zip(&self.q2_roots)
                .map(|(d, b)| {
                    let ratio = b.norm() / inner;
                    d.norm() / inner * ratio.powi(order as i32) / (1.0 - ratio)
                })
                .sum(),
        )
    }
}

const CLUSTER_EPS: f64 = 1e-9;

fn golden_max(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = g(x1);
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    f1.max(f2)
}

/// Certified data for the split `f = A(z) B(1/z)` truncated at `order`:
/// `A` carries `p/(scale q1)`, `B` carries `1/q2` in powers of `1/z`.
/// Totals are weighted l1 norms of the full series on the chosen annulus;
/// tails are the weighted l1 norms past `order`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorTails {
    pub order: usize,
    pub a_total: f64,
    pub a_tail: f64,
    pub b_total: f64,
    pub b_tail: f64,
    /// Allowance for floating cancellation in the tail subtractions.
    pub cancellation: f64,
}

impl FactorTails {
    /// Bound on `sup |A B - A_M B_M|`.
    pub fn product_bound(&self) -> f64 {
        self.a_tail * self.b_total + self.a_total * self.b_tail + self.cancellation
    }
}

/// Truncated two-sided expansion `sum_{|j| <= M} f_j z^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentSeries {
    pub r: f64,
    pub order: usize,
    /// `f_j` for `j = -M..=M`, stored at index `j + M`.
    pub coeffs: Vec<C64>,
    /// `a_n`, ascending coefficients of `p / (scale q1)`.
    pub factor_pos: Vec<C64>,
    /// `b_n = q_{n2}`, coefficients of `1/q2` in powers of `1/z`.
    pub factor_neg: Vec<C64>,
    pub rho1: f64,
    pub rho2: f64,
    /// Partial-fraction constants `sum |c_j|` and `sum |d_i| / r` (zero when
    /// the corresponding factor is trivial, NaN when roots cluster).
    pub c1: f64,
    pub c2: f64,
    pub tail_bound: f64,
    pub clustered_roots: bool,
}

impl LaurentSeries {
    pub fn coeff(&self, j: i64) -> C64 {
        let m = self.order as i64;
        if j.abs() > m {
            ZERO
        } else {
            self.coeffs[(j + m) as usize]
        }
    }

    pub fn eval(&self, z: C64) -> C64 {
        let m = self.order;
        let pos = horner(&self.coeffs[m..], z);
        let neg_coeffs: Vec<C64> = (0..=m).map(|k| if k == 0 { ZERO } else { self.coeffs[m - k] }).collect();
        pos + horner(&neg_coeffs, z.inv())
    }
}

/// Expands `f` into its truncated Laurent series with a certified tail bound
/// on the closed annulus.
pub fn laurent_expand(f: &AnnulusRational, order: usize) -> Result<LaurentSeries> {
    f.validate().map_err(|e| Error::InvalidRational(e.to_string()))?;
    let a = f.positive_factor_coeffs(order);
    let b = f.inverse_q2_coeffs(order);
    let m = order as i64;
    let mut coeffs = vec![ZERO; 2 * order + 1];
    for (n, &an) in a.iter().enumerate() {
        if an == ZERO {
            continue;
        }
        for (k, &bk) in b.iter().enumerate() {
            coeffs[(n as i64 - k as i64 + m) as usize] += an * bk;
        }
    }
    let tails = f.factor_tails(order, 1.0, f.r)?;
    let clustered = AnnulusRational::has_clustered(&f.q1_roots) || AnnulusRational::has_clustered(&f.q2_roots);
    let c1 = f.q1_residues().map_or(f64::NAN, |v| v.iter().map(|c| c.norm()).sum());
    let c2 = f.q2_residues().map_or(f64::NAN, |v| v.iter().map(|d| d.norm()).sum::<f64>() / f.r);
    let rho1 = if f.q1_roots.is_empty() { 0.0 } else { 1.0 / f.min_q1_modulus() };
    Ok(LaurentSeries {
        r: f.r,
        order,
        coeffs,
        factor_pos: a,
        factor_neg: b,
        rho1,
        rho2: f.max_q2_modulus(),
        c1,
        c2,
        tail_bound: tails.product_bound(),
        clustered_roots: clustered,
    })
}

/// Smallest order whose tail bound on `inner <= |z| <= outer` is at most
/// `target`, searched up to `max_order`.
pub fn order_for_tolerance(
    f: &AnnulusRational,
    target: f64,
    outer: f64,
    inner: f64,
    max_order: usize,
) -> Result<usize> {
    let bound = |m: usize| f.factor_tails(m, outer, inner).map(|t| t.product_bound());
    if bound(max_order)? > target {
        return Err(Error::BudgetExceeded { bound: bound(max_order)?, requested: target });
    }
    let (mut lo, mut hi) = (0usize, max_order);
    if bound(0)? <= target {
        return Ok(0);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if bound(mid)? <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Sampling distribution for random test functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionFamily {
    pub max_q1_roots: usize,
    pub max_q2_roots: usize,
    pub max_p_degree: usize,
    /// `q1` root moduli are log-uniform on `(1, q1_max_modulus]`.
    pub q1_max_modulus: f64,
    /// `q2` root moduli are log-uniform on `[r / q2_divisor, r)`.
    pub q2_divisor: f64,
}

impl Default for TestFunctionFamily {
    fn default() -> Self {
        Self { max_q1_roots: 4, max_q2_roots: 4, max_p_degree: 3, q1_max_modulus: 4.0, q2_divisor: 4.0 }
    }
}

impl TestFunctionFamily {
    /// Draws one function: root counts uniform in `0..=max`, arguments
    /// uniform, numerator with standard complex Gaussian coefficients.
    pub fn sample(&self, r: f64, rng: &mut SeededRng) -> AnnulusRational {
        let n1 = rng.random_range(0..=self.max_q1_roots);
        let n2 = rng.random_range(0..=self.max_q2_roots);
        let deg = rng.random_range(0..=self.max_p_degree);
        let q1_roots = (0..n1)
            .map(|_| {
                let u = 1.0 - rng.random::<f64>();
                let modulus = self.q1_max_modulus.powf(u);
                C64::from_polar(modulus, 2.0 * PI * rng.random::<f64>())
            })
            .collect();
        let q2_roots = (0..n2)
            .map(|_| {
                let u = 1.0 - rng.random::<f64>();
                let modulus = r * self.q2_divisor.powf(-u);
                C64::from_polar(modulus, 2.0 * PI * rng.random::<f64>())
            })
            .collect();
        let mut p: Vec<C64> = (0..=deg).map(|_| crate::linalg::complex_gaussian(rng)).collect();
        if p.iter().all(|&c| c == ZERO) {
            p[0] = ONE;
        }
        AnnulusRational { r, p, q1_roots, q2_roots, scale: ONE }
    }
}

#[derive(Serialize, Deserialize)]
struct RationalJson {
    r: f64,
    p: Vec<[f64; 2]>,
    q1_roots: Vec<[f64; 2]>,
    q2_roots: Vec<[f64; 2]>,
    scale: [f64; 2],
}

impl Serialize for AnnulusRational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RationalJson {
            r: self.r,
            p: self.p.iter().map(c_to_pair).collect(),
            q1_roots: self.q1_roots.iter().map(c_to_pair).collect(),
            q2_roots: self.q2_roots.iter().map(c_to_pair).collect(),
            scale: c_to_pair(&self.scale),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AnnulusRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RationalJson::deserialize(d)?;
        AnnulusRational::new(
            raw.r,
            raw.p.iter().map(pair_to_c).collect(),
            raw.q1_roots.iter().map(pair_to_c).collect(),
            raw.q2_roots.iter().map(pair_to_c).collect(),
            pair_to_c(&raw.scale),
        )
        .map_err(D::Error::custom)
    }
}
