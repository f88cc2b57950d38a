//! Numerical toolkit for the Ornstein-Uhlenbeck semigroup on finite-dimensional
//! Gaussian spaces: Hermite spectral calculus, Mehler quadrature, the K/U/Q
//! smoothing kernels, L log L norms, maximal functions, Lipschitz approximation
//! off small sets, and Monte Carlo for the space-time process (B, X).
//!
//! Every check returns its residual or slack; nothing panics on a false
//! inequality. `harness` runs checks in suites and writes JSON reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hermite;
pub mod model;
pub mod quadrature;
pub mod series;
pub mod stats;
pub mod spectral;
pub mod tgrid;
pub mod mehler;
pub mod kernels;
pub mod orlicz;
pub mod lusin;
pub mod mc;
pub mod harness;

pub use error::{Error, Result};
pub use model::GaussianModel;
pub use series::HermiteSeries;
