//! Operator theory on the annulus `r <= |z| <= 1`.
//!
//! The crate provides a rational functional calculus for matrices whose
//! spectrum sits in the closed annulus, certification tools for the
//! annulus-contraction class, recognition and splitting of normal operators
//! with spectrum on the two boundary circles, and an explicit two-carrier
//! dilation model built from a commuting isometric dilation of `(T, rT^-1)`.

pub mod error;
pub mod linalg;
pub mod calculus;
pub mod classes;
pub mod demo;
pub mod dilation;
pub mod rational;
pub mod unitary;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Tolerances, C64};
pub use rational::{laurent_expand, AnnulusRational, LaurentSeries};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
