//! Distribution discrepancies between two sample matrices.
//!
//! - [`dwmd`]: dimensional weighted orderwise moment discrepancy, its
//!   gradient, and the geometric truncation bound.
//! - [`smd`]: the same series with the dimensional weights replaced by their
//!   average.
//! - [`cmd`]: central moment discrepancy.
//! - [`mmd_rbf`]: Gaussian-kernel maximum mean discrepancy (biased estimator).

mod cmd;
mod dwmd;
mod mmd;

pub use cmd::{cmd, cmd_with_gradient, IntervalWidth};
pub use dwmd::{
    dwmd, dwmd_from_moments, dwmd_gradient, dwmd_with_gradient, fraction, fraction_derivative,
    smd, smd_from_moments, smd_gradient, smd_with_gradient, truncation_bound, DERIVATIVE_CLIP,
    ZERO_GAP,
};
pub use mmd::{median_heuristic, mmd_rbf, mmd_rbf_with_gradient, Bandwidth, MEDIAN_SUBSAMPLE};

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::weighting::{CPolicy, WeightProfile};

/// Parameters of the moment series.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct DwmdConfig {
    /// Number of moment orders kept.
    pub n: usize,
    /// Decay rate of the order weights.
    pub psi: f64,
    /// Exponent on the moment gap, in `(0, 1]`.
    pub beta: f64,
    pub c_policy: CPolicy,
    /// Trimming fraction for the robust means.
    pub alpha: f64,
    /// Standardize both inputs by pooled statistics first.
    pub standardize: bool,
}

impl Default for DwmdConfig {
    fn default() -> Self {
        Self {
            n: 5,
            psi: 1.0,
            beta: 1.0,
            c_policy: CPolicy::Scalar { value: 0.05 },
            alpha: 0.1,
            standardize: false,
        }
    }
}

impl DwmdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", "moment order must be >= 1"));
        }
        if !(self.psi > 0.0 && self.psi.is_finite()) {
            return Err(invalid("psi", format!("{} must be positive and finite", self.psi)));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(invalid("beta", format!("{} is outside (0, 1]", self.beta)));
        }
        if !(0.0..0.5).contains(&self.alpha) {
            return Err(invalid("alpha", format!("{} is outside [0, 0.5)", self.alpha)));
        }
        self.c_policy.validate()
    }
}

/// Closed-form tail bound on the terms dropped after order `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum TruncationBound {
    /// `sum_{k>n} 2^{-nu k}` with `nu = floor(psi / tau_max) >= 1`.
    Bounded { nu: f64, bound: f64 },
    /// `nu < 1`: the geometric tail does not converge.
    Divergent,
}

impl TruncationBound {
    pub fn value(&self) -> Option<f64> {
        match *self {
            TruncationBound::Bounded { bound, .. } => Some(bound),
            TruncationBound::Divergent => None,
        }
    }
}

/// Per-order, per-dimension terms of a truncated moment series.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiscrepancyReport {
    pub orders: usize,
    pub dim: usize,
    /// Order-major `orders x dim` table of weighted fractions.
    pub per_order_terms: Vec<f64>,
    /// Sum over dimensions for each order.
    pub per_order_totals: Vec<f64>,
    pub total: f64,
    pub truncation_bound: TruncationBound,
    pub weight_profile: WeightProfile,
}

impl DiscrepancyReport {
    /// Term at order `k` (1-based), dimension `j`.
    pub fn term(&self, k: usize, j: usize) -> f64 {
        self.per_order_terms[(k - 1) * self.dim + j]
    }
}
