//! Dimensional weighting: per-dimension gaps between robust (outlier-trimmed)
//! means of the two domains, their max-normalization, and the resolved
//! constant `C`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{invalid, Error, Result};
use crate::matrix::{check_same_dim, SampleMatrix};

/// Floor applied to normalized weights so `-psi*k/tau` stays finite.
pub const TAU_FLOOR: f64 = 1e-6;
/// Floor applied to data-derived `C`.
pub const C_FLOOR: f64 = 1e-8;

/// A one-dimensional location estimator that ignores anomalous samples.
pub trait RobustLocation {
    fn location(&self, values: &[f64]) -> Result<f64>;
}

/// Drops the `ceil(alpha * m)` values farthest from the median and averages
/// the rest.
///
/// On a single dimension a one-class decision boundary is an interval, so
/// trimming by distance from the median plays the same role.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianTrim {
    alpha: f64,
}

impl MedianTrim {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&alpha) {
            return Err(invalid("alpha", format!("{alpha} is outside [0, 0.5)")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of samples discarded out of `m`.
    pub fn discarded(&self, m: usize) -> usize {
        // 1e-9 absorbs products such as 0.1 * 30 = 3.0000000000000004.
        let raw = libm::ceil(self.alpha * m as f64 - 1e-9);
        if raw <= 0.0 {
            0
        } else {
            raw as usize
        }
    }
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

impl RobustLocation for MedianTrim {
    fn location(&self, values: &[f64]) -> Result<f64> {
        let m = values.len();
        if m == 0 {
            return Err(Error::TooFewSamples {
                found: 0,
                needed: 1,
                context: "robust mean",
            });
        }
        let drop = self.discarded(m);
        if drop >= m {
            return Err(Error::TooFewSamples {
                found: m,
                needed: m + 1,
                context: "trimming would discard every sample",
            });
        }
        if drop == 0 {
            return Ok(values.iter().sum::<f64>() / m as f64);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let med = median_of_sorted(&sorted);
        // Ties in distance are broken by value so the result depends only on
        // the multiset of values, not on row order.
        sorted.sort_by(|a, b| {
            let (da, db) = ((a - med).abs(), (b - med).abs());
            match da.total_cmp(&db) {
                Ordering::Equal => a.total_cmp(b),
                o => o,
            }
        });
        let kept = &sorted[..m - drop];
        Ok(kept.iter().sum::<f64>() / kept.len() as f64)
    }
}

/// Robust per-dimension means with median-distance trimming at fraction `alpha`.
pub fn robust_dim_means(samples: &SampleMatrix, alpha: f64) -> Result<Vec<f64>> {
    robust_dim_means_with(samples, &MedianTrim::new(alpha)?)
}

pub fn robust_dim_means_with<E: RobustLocation + ?Sized>(
    samples: &SampleMatrix,
    estimator: &E,
) -> Result<Vec<f64>> {
    let mut column = vec![0.0; samples.samples()];
    (0..samples.dim())
        .map(|j| {
            for (c, v) in column.iter_mut().zip(samples.column(j)) {
                *c = v;
            }
            estimator.location(&column)
        })
        .collect()
}

/// How the constant `C` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum CPolicy {
    /// A fixed positive constant.
    Scalar { value: f64 },
    /// `C = tau[0]`, the gap in the first dimension.
    TauFirst,
    /// `C_j = tau[j]` per dimension.
    TauVector,
}

impl Default for CPolicy {
    fn default() -> Self {
        CPolicy::Scalar { value: 0.05 }
    }
}

impl CPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CPolicy::Scalar { value } if !(value > 0.0 && value.is_finite()) => {
                Err(invalid("c", format!("{value} must be a positive finite constant")))
            }
            _ => Ok(()),
        }
    }
}

/// Resolved `C`, either shared or per dimension.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CValue {
    Scalar(f64),
    PerDim(Vec<f64>),
}

impl CValue {
    #[inline]
    pub fn at(&self, j: usize) -> f64 {
        match self {
            CValue::Scalar(c) => *c,
            CValue::PerDim(v) => v[j],
        }
    }
}

/// Dimensional weights for one pair of domains.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightProfile {
    /// `|h_S[j] - h_T[j]|` per dimension.
    pub tau: Vec<f64>,
    /// `tau / tau_max`, floored at [`TAU_FLOOR`]; all ones when `tau_max == 0`.
    pub tau_normalized: Vec<f64>,
    pub tau_max: f64,
    pub c: CValue,
    pub alpha: f64,
}

impl WeightProfile {
    /// Builds a profile from an already computed gap vector.
    pub fn from_tau(tau: Vec<f64>, c_policy: CPolicy, alpha: f64) -> Result<Self> {
        c_policy.validate()?;
        if tau.is_empty() {
            return Err(invalid("tau", "weight profile needs at least one dimension"));
        }
        if let Some(bad) = tau.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(invalid("tau", format!("entries must be finite and >= 0, got {bad}")));
        }
        let tau_max = tau.iter().copied().fold(0.0, f64::max);
        let tau_normalized = if tau_max > 0.0 {
            tau.iter().map(|t| (t / tau_max).max(TAU_FLOOR)).collect()
        } else {
            vec![1.0; tau.len()]
        };
        let c = match c_policy {
            CPolicy::Scalar { value } => CValue::Scalar(value),
            CPolicy::TauFirst => CValue::Scalar(tau[0].max(C_FLOOR)),
            CPolicy::TauVector => CValue::PerDim(tau.iter().map(|t| t.max(C_FLOOR)).collect()),
        };
        Ok(Self {
            tau,
            tau_normalized,
            tau_max,
            c,
            alpha,
        })
    }

    /// A profile with uniform weights (`tau_normalized = 1`) and `tau_max = 1`.
    pub fn uniform(dim: usize, c: f64) -> Result<Self> {
        Self::from_tau(vec![1.0; dim], CPolicy::Scalar { value: c }, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.tau.len()
    }

    /// The same profile with every normalized weight replaced by their mean.
    pub fn averaged(&self) -> Self {
        let d = self.tau_normalized.len() as f64;
        let tau_c = self.tau_normalized.iter().sum::<f64>() / d;
        Self {
            tau_normalized: vec![tau_c; self.tau_normalized.len()],
            ..self.clone()
        }
    }
}

/// Robust-mean gaps between two domains and the resolved `C`.
pub fn weight_profile(
    source: &SampleMatrix,
    target: &SampleMatrix,
    alpha: f64,
    c_policy: CPolicy,
) -> Result<WeightProfile> {
    check_same_dim(source, target)?;
    let estimator = MedianTrim::new(alpha)?;
    let hs = robust_dim_means_with(source, &estimator)?;
    let ht = robust_dim_means_with(target, &estimator)?;
    let tau = hs.iter().zip(&ht).map(|(a, b)| (a - b).abs()).collect();
    WeightProfile::from_tau(tau, c_policy, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(values: &[f64]) -> SampleMatrix {
        SampleMatrix::from_vec(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn single_outlier_is_dropped() {
        let mut v = vec![1.0; 9];
        v.push(100.0);
        assert_eq!(robust_dim_means(&col(&v), 0.1).unwrap(), vec![1.0]);
    }

    #[test]
    fn alpha_zero_is_plain_mean() {
        let s = SampleMatrix::from_rows(&[[1.0, 10.0], [2.0, -4.0], [6.0, 0.0]]).unwrap();
        assert_eq!(robust_dim_means(&s, 0.0).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn discard_count_is_not_fooled_by_rounding() {
        let t = MedianTrim::new(0.1).unwrap();
        assert_eq!(t.discarded(30), 3);
        assert_eq!(t.discarded(10), 1);
        assert_eq!(t.discarded(11), 2);
        assert_eq!(t.discarded(1), 1);
        assert_eq!(MedianTrim::new(0.0).unwrap().discarded(50), 0);
    }

    #[test]
    fn invalid_alpha_and_tiny_samples() {
        assert!(MedianTrim::new(0.5).is_err());
        assert!(MedianTrim::new(-0.1).is_err());
        assert!(matches!(
            robust_dim_means(&col(&[1.0]), 0.1),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(MedianTrim::new(0.1).unwrap().location(&[]).is_err());
    }

    #[test]
    fn identical_domains_give_uniform_weights() {
        let s = SampleMatrix::from_rows(&[[1.0, 2.0], [3.0, 5.0], [0.0, 0.0]]).unwrap();
        let p = weight_profile(&s, &s, 0.1, CPolicy::default()).unwrap();
        assert_eq!(p.tau, vec![0.0, 0.0]);
        assert_eq!(p.tau_max, 0.0);
        assert_eq!(p.tau_normalized, vec![1.0, 1.0]);
    }

    #[test]
    fn normalization_by_max_gap() {
        let s = SampleMatrix::from_rows(&[[0.0, 0.0]]).unwrap();
        let t = SampleMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let p = weight_profile(&s, &t, 0.0, CPolicy::default()).unwrap();
        assert_eq!(p.tau, vec![1.0, 2.0]);
        assert_eq!(p.tau_max, 2.0);
        assert_eq!(p.tau_normalized, vec![0.5, 1.0]);
    }

    #[test]
    fn zero_gap_is_floored() {
        let p = WeightProfile::from_tau(vec![0.0, 3.0], CPolicy::default(), 0.1).unwrap();
        assert_eq!(p.tau_normalized, vec![TAU_FLOOR, 1.0]);
    }

    #[test]
    fn c_policies() {
        let tau = vec![0.0, 0.4];
        let p = WeightProfile::from_tau(tau.clone(), CPolicy::TauFirst, 0.1).unwrap();
        assert_eq!(p.c, CValue::Scalar(C_FLOOR));
        let p = WeightProfile::from_tau(tau.clone(), CPolicy::TauVector, 0.1).unwrap();
        assert_eq!(p.c, CValue::PerDim(vec![C_FLOOR, 0.4]));
        let p = WeightProfile::from_tau(tau.clone(), CPolicy::Scalar { value: 0.05 }, 0.1).unwrap();
        assert_eq!(p.c.at(1), 0.05);
        assert!(WeightProfile::from_tau(tau, CPolicy::Scalar { value: 0.0 }, 0.1).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let a = SampleMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let b = col(&[1.0]);
        assert!(matches!(
            weight_profile(&a, &b, 0.1, CPolicy::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
