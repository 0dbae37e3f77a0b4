//! Bell count regression with Liu-type shrinkage estimators.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`], [`special`], [`random`], [`optimize`]: small dense numerical
//!   kernels (Jacobi eigendecomposition, Cholesky, Lambert W, seeded sampling,
//!   bracketed 1-D minimisation).
//! - [`bell`]: the Bell distribution (pmf, moments, sampling).
//! - [`glm`]: maximum likelihood fitting of the log-link Bell regression by
//!   iteratively reweighted least squares, the canonical (spectral) form of the
//!   weighted cross-product matrix, and collinearity diagnostics.
//! - [`shrinkage`]: the MLE, LTE, AULTE and MAULTE estimators with their
//!   closed-form bias, covariance, matrix MSE and scalar MSE, plus biasing
//!   parameter selection.
//! - [`theory`]: checkers for the superiority conditions between estimators.
//! - [`simulation`]: the Monte Carlo harness.

// `!(x > 0.0)` is used on purpose so that NaN is rejected along with
// non-positive values; index loops mirror the textbook matrix algorithms.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bell;
pub mod error;
pub mod glm;
pub mod linalg;
pub mod optimize;
pub mod random;
pub mod shrinkage;
pub mod simulation;
pub mod special;
pub mod theory;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use random::Rng;
