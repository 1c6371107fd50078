use thiserror::Error;

/// Failure modes shared across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not normal (commutator {commutator:.3e} exceeds {bound:.3e})")]
    NotNormal { commutator: f64, bound: f64 },
    #[error("eigenvalue iteration did not converge after {iterations} sweeps")]
    NoConvergence { iterations: usize },
    #[error("matrix is singular to working precision (pivot {pivot:.3e})")]
    Singular { pivot: f64 },
    #[error("columns are not orthonormal (defect {defect:.3e})")]
    NotIsometric { defect: f64 },
    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error("matrix is not invertible")]
    NotInvertible,
    #[error("operator is not a contraction (norm {norm:.6})")]
    NotContraction { norm: f64 },
    #[error("operators do not commute (commutator {commutator:.3e})")]
    NotCommuting { commutator: f64 },
    #[error("inner radius r = {0} is not in (0, 1)")]
    BadRadius(f64),
    #[error("q1 root {root} lies in the closed unit disk")]
    RootInClosedDisk { root: String },
    #[error("q2 root {root} lies outside the open disk of radius r")]
    RootOutsideInnerDisk { root: String },
    #[error("invalid rational function: {0}")]
    InvalidRational(String),
    #[error("evaluation point hits a pole")]
    PoleHit,
    #[error("Laurent series preconditions fail: {0}")]
    SeriesDivergent(String),
    #[error("spectrum meets the integration contour")]
    SpectrumOnContour,
    #[error("a pole of f lies inside the integration contour")]
    PoleInsideContour,
    #[error("no spectral gap separates the two circles")]
    NoSpectralGap,
    #[error("matrix is not an A_r-unitary: {0}")]
    NotArUnitary(String),
    #[error("degree budget exceeded: tail bound {bound:.3e} above requested {requested:.3e}")]
    BudgetExceeded { bound: f64, requested: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
