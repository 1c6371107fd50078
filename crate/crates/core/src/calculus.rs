//! Rational functional calculus for matrices with spectrum in the annulus:
//! direct factored evaluation, truncated Laurent series and two-circle
//! Cauchy quadrature, plus Riesz projections that split the spectrum
//! between the two boundary circles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, inverse, operator_norm, ComplexMatrix, Lu, Tolerances, C64, ONE};
use crate::rational::{laurent_expand, AnnulusRational};

/// Two-circle contour `|w| = 1 + delta` (positive) and `|w| = r - delta`
/// (negative), sampled with `nodes` trapezoid points per circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub delta: f64,
    pub nodes: usize,
}

pub const DEFAULT_NODES: usize = 512;

impl ContourSpec {
    pub fn new(delta: f64, nodes: usize) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) || nodes == 0 {
            return Err(Error::InvalidInput(format!("contour needs delta > 0 and nodes > 0, got {delta}, {nodes}")));
        }
        Ok(Self { delta, nodes })
    }

    /// Midway between how far the spectrum of `t` leaks out of the closed
    /// annulus (usually zero) and the nearest pole of `f`, with `r` counted
    /// as a pole gap so the inner circle stays off the origin.
    pub fn automatic(f: &AnnulusRational, t: &ComplexMatrix, nodes: usize) -> Result<Self> {
        let spectrum = eigenvalues(t)?;
        let pole_gap = f
            .q1_roots
            .iter()
            .map(|a| a.norm() - 1.0)
            .chain(f.q2_roots.iter().map(|b| f.r - b.norm()))
            .fold(f.r, f64::min);
        let excess = spectrum
            .iter()
            .flat_map(|l| [l.norm() - 1.0, f.r - l.norm()])
            .fold(0.0, f64::max);
        Self::new((excess + pole_gap) / 2.0, nodes)
    }
}

fn check_square(t: &ComplexMatrix) -> Result<usize> {
    t.require_square()
}

/// `f(T) = p(T) q1(T)^-1 q2(T)^-1 / scale` by Horner and factor-by-factor solves.
pub fn eval_direct(f: &AnnulusRational, t: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    f.validate()?;
    let n = check_square(t)?;
    let mut x = ComplexMatrix::zeros(n, n);
    for &c in f.p.iter().rev() {
        x = (&x * t).shift(c);
    }
    for &root in f.q1_roots.iter().chain(&f.q2_roots) {
        x = Lu::new(&t.shift(-root), tol.rank_tol)?.solve(&x)?;
    }
    Ok(x.scale(f.scale.inv()))
}

/// Truncated Laurent evaluation with its certified error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentEvaluation {
    pub value: ComplexMatrix,
    pub order: usize,
    /// Series truncation bound on the annulus reached by `T` and `rT^-1`.
    pub tail_bound: f64,
    /// Bound on `||value - f(T)||`: `tail_bound` plus `rounding`;
    /// infinite when the norms of `T` and `rT^-1` reach a pole of `f`.
    pub error_bound: f64,
    /// First-order rounding estimate for the matrix sum itself.
    pub rounding: f64,
}

/// `sum_{|j| <= M} f_j T^j`.
pub fn eval_laurent(f: &AnnulusRational, t: &ComplexMatrix, order: usize, tol: &Tolerances) -> Result<ComplexMatrix> {
    Ok(eval_laurent_certified(f, t, order, tol)?.value)
}

pub fn eval_laurent_certified(
    f: &AnnulusRational,
    t: &ComplexMatrix,
    order: usize,
    tol: &Tolerances,
) -> Result<LaurentEvaluation> {
    let n = check_square(t)?;
    let series = laurent_expand(f, order)?;
    let t_inv = inverse(t, tol).map_err(|_| Error::NotInvertible)?;
    let norm = operator_norm(t);
    let inv_norm = f.r * operator_norm(&t_inv);
    let slack = 1.0 + tol.verify_tol;
    if norm > slack || inv_norm > slack {
        return Err(Error::SeriesDivergent(format!(
            "||T|| = {norm:.6}, ||rT^-1|| = {inv_norm:.6} exceed 1 + {:.1e}",
            tol.verify_tol
        )));
    }
    let mut value = ComplexMatrix::identity(n).scale(series.coeff(0));
    let mut pos = ComplexMatrix::identity(n);
    let mut neg = ComplexMatrix::identity(n);
    let mut weight = series.coeff(0).norm() * (n as f64).sqrt();
    for j in 1..=order {
        pos = &pos * t;
        neg = &neg * &t_inv;
        value = &value + &pos.scale(series.coeff(j as i64));
        value = &value + &neg.scale(series.coeff(-(j as i64)));
        weight += series.coeff(j as i64).norm() * pos.frobenius_norm();
        weight += series.coeff(-(j as i64)).norm() * neg.frobenius_norm();
    }
    let rounding = 4.0 * (n + order + 1) as f64 * f64::EPSILON * weight;
    let gamma = norm.max(inv_norm).max(1.0);
    let tail = if gamma == 1.0 {
        series.tail_bound
    } else {
        f.factor_tails(order, gamma, f.r / gamma).map_or(f64::INFINITY, |t| t.product_bound())
    };
    Ok(LaurentEvaluation { value, order, tail_bound: tail, error_bound: tail + rounding, rounding })
}

/// Trapezoid sum `(1/N) sum_k g(w_k) w_k (w_k - T)^-1` over `|w| = radius`.
fn circle_sum(
    t: &ComplexMatrix,
    radius: f64,
    nodes: usize,
    tol: &Tolerances,
    g: impl Fn(C64) -> C64,
) -> Result<ComplexMatrix> {
    let n = t.rows();
    let id = ComplexMatrix::identity(n);
    let mut acc = ComplexMatrix::zeros(n, n);
    for k in 0..nodes {
        let w = C64::from_polar(radius, 2.0 * PI * k as f64 / nodes as f64);
        let resolvent = Lu::new(&(-t).shift(w), tol.rank_tol)
            .map_err(|_| Error::SpectrumOnContour)?
            .solve(&id)?;
        acc = &acc + &resolvent.scale(g(w) * w);
    }
    Ok(acc.scale_real(1.0 / nodes as f64))
}

/// `(1/2 pi i) oint f(w) (w - T)^-1 dw` over the two-circle cycle.
pub fn eval_contour(f: &AnnulusRational, t: &ComplexMatrix, spec: ContourSpec, tol: &Tolerances) -> Result<ComplexMatrix> {
    f.validate()?;
    check_square(t)?;
    let spec = ContourSpec::new(spec.delta, spec.nodes)?;
    let outer = 1.0 + spec.delta;
    let inner = f.r - spec.delta;
    if inner <= 0.0 {
        return Err(Error::InvalidInput(format!("delta {} leaves no inner circle", spec.delta)));
    }
    if f.q1_roots.iter().any(|a| a.norm() <= outer) || f.q2_roots.iter().any(|b| b.norm() >= inner) {
        return Err(Error::PoleInsideContour);
    }
    if eigenvalues(t)?.iter().any(|l| l.norm() >= outer || l.norm() <= inner) {
        return Err(Error::SpectrumOnContour);
    }
    let g = |w: C64| f.eval_unchecked(w);
    let out = circle_sum(t, outer, spec.nodes, tol, g)?;
    let inn = circle_sum(t, inner, spec.nodes, tol, g)?;
    Ok(&out - &inn)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralPart {
    /// Eigenvalues near the unit circle.
    Outer,
    /// Eigenvalues near the circle of radius `r`.
    Inner,
}

/// Eigenvalues with modulus above `(1 + r) / 2` form the outer group.
pub fn split_threshold(r: f64) -> f64 {
    (1.0 + r) / 2.0
}

/// Riesz projection onto the spectral part near the chosen circle.
///
/// The inner projection integrates the resolvent over the circle halfway
/// between the two groups; the node count grows until the trapezoid error
/// `q^N` falls below machine precision, where `q` is the worse of the two
/// modulus ratios to that circle.
pub fn riesz_projection(
    t: &ComplexMatrix,
    r: f64,
    part: SpectralPart,
    spec: ContourSpec,
    tol: &Tolerances,
) -> Result<ComplexMatrix> {
    let n = check_square(t)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::BadRadius(r));
    }
    let spec = ContourSpec::new(spec.delta, spec.nodes)?;
    let spectrum = eigenvalues(t)?;
    let threshold = split_threshold(r);
    let outer_min = spectrum.iter().map(|l| l.norm()).filter(|&m| m > threshold).fold(f64::INFINITY, f64::min);
    let inner_max = spectrum.iter().map(|l| l.norm()).filter(|&m| m <= threshold).fold(0.0, f64::max);
    let has_outer = outer_min.is_finite();
    let has_inner = spectrum.iter().any(|l| l.norm() <= threshold);
    let inner_proj = if !has_inner {
        ComplexMatrix::zeros(n, n)
    } else if !has_outer {
        ComplexMatrix::identity(n)
    } else {
        if outer_min - inner_max <= 2.0 * spec.delta {
            return Err(Error::NoSpectralGap);
        }
        let radius = (outer_min + inner_max) / 2.0;
        let q = (inner_max / radius).max(radius / outer_min);
        let needed = (-37.0 / q.ln()).ceil() as usize;
        let nodes = spec.nodes.max(needed).min(1 << 16);
        circle_sum(t, radius, nodes, tol, |_| ONE)?
    };
    Ok(match part {
        SpectralPart::Inner => inner_proj,
        SpectralPart::Outer => &ComplexMatrix::identity(n) - &inner_proj,
    })
}
