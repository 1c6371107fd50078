//! End-to-end run on `T = [[sqrt r, 1 - r], [0, sqrt r]]`: an invertible
//! matrix with spectrum in the annulus and norm 1 that is nonetheless not an
//! annulus contraction.

use serde::{Deserialize, Serialize};

use crate::classes::{cnn_split, example_matrix, test_ratio, williams_verdict, WilliamsVerdict};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, eigh, operator_norm, Tolerances, C64, ONE, ZERO};
use crate::rational::AnnulusRational;
use crate::VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: Vec<f64>,
    pub expected: Vec<f64>,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, measured: Vec<f64>, expected: Vec<f64>, tolerance: f64) -> Self {
        let error = measured.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let pass = measured.len() == expected.len() && error <= tolerance;
        Self { name: name.into(), measured, expected, error, tolerance, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleReport {
    pub version: String,
    pub r: f64,
    pub matrix: crate::ComplexMatrix,
    pub checks: Vec<Check>,
    pub cnn_dim: usize,
    pub williams: WilliamsVerdict,
    /// `||f(T)|| / ||f||_inf` for `f(z) = z - r/z`; above 1 exactly when `r < 1/3`.
    pub witness_ratio: f64,
    pub witness_ratio_expected: f64,
    pub pass: bool,
}

pub fn demo_example(r: f64, tol: &Tolerances) -> Result<ExampleReport> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::BadRadius(r));
    }
    let t = example_matrix(r);
    let mut checks = Vec::new();

    let mut spec: Vec<C64> = eigenvalues(&t)?;
    spec.sort_by(|a, b| a.re.total_cmp(&b.re));
    let mut measured: Vec<f64> = spec.iter().map(|z| z.re).collect();
    measured.extend(spec.iter().map(|z| z.im));
    let s = r.sqrt();
    checks.push(Check::new("spectrum of T (real parts, then imaginary parts)", measured, vec![s, s, 0.0, 0.0], 1e-10));

    checks.push(Check::new("operator norm of T", vec![operator_norm(&t)], vec![1.0], 1e-12));

    let (vals, _) = eigh(&t.adjoint().matmul(&t))?;
    checks.push(Check::new("spectrum of T*T", vals, vec![1.0, r * r], 1e-10));

    let split = cnn_split(&t, tol)?;
    let p_cnn_error = split.p_cnn.distance(&crate::ComplexMatrix::identity(2));
    checks.push(Check::new("distance of P_cnn from I", vec![p_cnn_error], vec![0.0], 1e-10));

    let williams = williams_verdict(&t, r, tol)?;
    let witness = AnnulusRational::new(r, vec![C64::new(-r, 0.0), ZERO, ONE], vec![], vec![ZERO], ONE)?;
    let witness_ratio = test_ratio(&witness, &t, tol)?;
    let witness_ratio_expected = 2.0 * (1.0 - r) / (1.0 + r);
    let pass = checks.iter().all(|c| c.pass)
        && split.cnn_dim() == 2
        && williams == WilliamsVerdict::MinimalDiskRefutation;
    Ok(ExampleReport {
        version: VERSION.to_string(),
        r,
        matrix: t,
        checks,
        cnn_dim: split.cnn_dim(),
        williams,
        witness_ratio,
        witness_ratio_expected,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_reproduces() {
        for r in [0.25, 0.5, 0.81] {
            let rep = demo_example(r, &Tolerances::default()).unwrap();
            assert!(rep.pass, "{rep:?}");
            assert!((rep.witness_ratio - rep.witness_ratio_expected).abs() < 1e-9);
        }
        assert!(demo_example(1.0, &Tolerances::default()).is_err());
    }
}
