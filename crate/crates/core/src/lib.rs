//! Dimensional weighted orderwise moment discrepancy (DWMD).
//!
//! A moment-series discrepancy between two empirical feature distributions:
//! for each order `k` and dimension `j`, the raw-moment gap
//! `g = E[X_S,j^k] - E[X_T,j^k]` contributes
//!
//! ```text
//! exp(-psi * k / tau_j) * |g|^beta / (C + |g|^beta)
//! ```
//!
//! where `tau_j` is the normalized gap between outlier-trimmed means of the
//! two domains in dimension `j`. Dimensions that differ more get larger
//! weights; higher orders decay geometrically.
//!
//! The crate is `no_std` (it needs `alloc`). It provides:
//!
//! - [`moments`]: raw and central moments, pooled standardization.
//! - [`weighting`]: trimmed means and the weight profile.
//! - [`discrepancy`]: DWMD and its gradient, the averaged-weight ablation
//!   (SMD), central moment discrepancy (CMD), Gaussian-kernel MMD, and the
//!   truncation bound.
//! - [`regularizer`]: a uniform value-and-gradient interface over those metrics.
//! - [`nettrain`]: a small feedforward classifier trained with a discrepancy
//!   penalty on hidden activations.
//!
//! ```
//! use dwmd_core::{discrepancy::{dwmd, DwmdConfig}, SampleMatrix};
//!
//! let source = SampleMatrix::from_rows(&[[0.0, 1.0], [0.2, 0.9], [0.1, 1.1]]).unwrap();
//! let target = SampleMatrix::from_rows(&[[0.5, 1.0], [0.7, 0.9], [0.6, 1.2]]).unwrap();
//! let cfg = DwmdConfig { alpha: 0.0, ..DwmdConfig::default() };
//! let report = dwmd(&source, &target, &cfg).unwrap();
//! assert!(report.total > 0.0);
//! assert_eq!(dwmd(&source, &source, &cfg).unwrap().total, 0.0);
//! ```

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod discrepancy;
pub mod error;
pub mod matrix;
pub mod moments;
pub mod nettrain;
pub mod regularizer;
pub mod weighting;

pub use error::{Error, Result};
pub use matrix::{Matrix, SampleMatrix};
pub use moments::MomentSequence;
pub use weighting::{CPolicy, WeightProfile};
