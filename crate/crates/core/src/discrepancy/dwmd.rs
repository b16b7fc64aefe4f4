use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{DiscrepancyReport, DwmdConfig, TruncationBound};
use crate::error::{Error, Result};
use crate::matrix::{check_same_dim, Matrix, SampleMatrix};
use crate::moments::{raw_moments, MomentSequence, PooledStats};
use crate::weighting::{weight_profile, WeightProfile};

/// Moment gaps below this are treated as exactly zero.
pub const ZERO_GAP: f64 = 1e-15;
/// Cap on the magnitude of the fraction's derivative (matters for `beta < 1`).
pub const DERIVATIVE_CLIP: f64 = 1e6;

/// `|gap|^beta / (c + |gap|^beta)` with gaps below [`ZERO_GAP`] mapped to 0.
#[inline]
pub fn fraction(gap: f64, beta: f64, c: f64) -> f64 {
    let z = gap.abs();
    if z < ZERO_GAP {
        return 0.0;
    }
    let p = if beta == 1.0 { z } else { libm::pow(z, beta) };
    p / (c + p)
}

/// Derivative of [`fraction`] with respect to the signed gap.
///
/// Zero at (numerically) zero gaps, clipped at [`DERIVATIVE_CLIP`] elsewhere.
#[inline]
pub fn fraction_derivative(gap: f64, beta: f64, c: f64) -> f64 {
    let z = gap.abs();
    if z < ZERO_GAP {
        return 0.0;
    }
    let (p, dp) = if beta == 1.0 {
        (z, 1.0)
    } else {
        let p = libm::pow(z, beta);
        (p, beta * p / z)
    };
    let denom = c + p;
    let magnitude = (c * dp / (denom * denom)).min(DERIVATIVE_CLIP);
    if gap > 0.0 {
        magnitude
    } else {
        -magnitude
    }
}

#[inline]
fn order_weight(psi: f64, k: usize, tau_normalized: f64) -> f64 {
    libm::exp(-psi * k as f64 / tau_normalized)
}

/// Tail bound on the error of keeping only the first `n` orders.
///
/// `nu = floor(psi / tau_max)`; a zero `tau_max` is treated as 1.
pub fn truncation_bound(profile: &WeightProfile, psi: f64, n: usize) -> TruncationBound {
    let tau_max = if profile.tau_max > 0.0 {
        profile.tau_max
    } else {
        1.0
    };
    let nu = libm::floor(psi / tau_max);
    if !(nu >= 1.0) {
        return TruncationBound::Divergent;
    }
    let ratio = libm::exp2(-nu);
    let bound = libm::exp2(-nu * (n as f64 + 1.0)) / (1.0 - ratio);
    TruncationBound::Bounded { nu, bound }
}

fn check_moment_shapes(
    ms: &MomentSequence,
    mt: &MomentSequence,
    profile: &WeightProfile,
    n: usize,
) -> Result<()> {
    if ms.dim() != mt.dim() {
        return Err(Error::DimensionMismatch {
            source_dim: ms.dim(),
            target_dim: mt.dim(),
        });
    }
    if profile.dim() != ms.dim() {
        return Err(Error::ShapeMismatch {
            what: format!(
                "weight profile has {} dimensions, moments have {}",
                profile.dim(),
                ms.dim()
            ),
        });
    }
    if ms.orders() < n || mt.orders() < n {
        return Err(Error::ShapeMismatch {
            what: format!(
                "need {n} moment orders, got {} and {}",
                ms.orders(),
                mt.orders()
            ),
        });
    }
    Ok(())
}

/// The series on caller-supplied moments with a frozen weight profile.
///
/// Only the first `config.n` orders of each sequence are used.
pub fn dwmd_from_moments(
    ms: &MomentSequence,
    mt: &MomentSequence,
    profile: &WeightProfile,
    config: &DwmdConfig,
) -> Result<DiscrepancyReport> {
    config.validate()?;
    let n = config.n;
    check_moment_shapes(ms, mt, profile, n)?;
    let d = ms.dim();
    let mut per_order_terms = Vec::with_capacity(n * d);
    let mut per_order_totals = Vec::with_capacity(n);
    for k in 1..=n {
        let mut order_total = 0.0;
        for j in 0..d {
            let gap = ms.get(k, j) - mt.get(k, j);
            let f = fraction(gap, config.beta, profile.c.at(j));
            let term = if f == 0.0 {
                0.0
            } else {
                order_weight(config.psi, k, profile.tau_normalized[j]) * f
            };
            per_order_terms.push(term);
            order_total += term;
        }
        per_order_totals.push(order_total);
    }
    let total = per_order_totals.iter().sum();
    Ok(DiscrepancyReport {
        orders: n,
        dim: d,
        per_order_terms,
        per_order_totals,
        total,
        truncation_bound: truncation_bound(profile, config.psi, n),
        weight_profile: profile.clone(),
    })
}

/// Same as [`dwmd_from_moments`] but with the averaged weights.
pub fn smd_from_moments(
    ms: &MomentSequence,
    mt: &MomentSequence,
    profile: &WeightProfile,
    config: &DwmdConfig,
) -> Result<DiscrepancyReport> {
    dwmd_from_moments(ms, mt, &profile.averaged(), config)
}

#[derive(Clone, Copy, PartialEq)]
enum Weighting {
    Dimensional,
    Averaged,
}

struct Prepared {
    source: SampleMatrix,
    target: SampleMatrix,
    stats: Option<PooledStats>,
    ms: MomentSequence,
    mt: MomentSequence,
    profile: WeightProfile,
}

fn prepare(
    source: &SampleMatrix,
    target: &SampleMatrix,
    config: &DwmdConfig,
    weighting: Weighting,
) -> Result<Prepared> {
    config.validate()?;
    check_same_dim(source, target)?;
    let (source, target, stats) = if config.standardize {
        let stats = PooledStats::compute(source, target)?;
        (stats.apply(source)?, stats.apply(target)?, Some(stats))
    } else {
        (source.clone(), target.clone(), None)
    };
    let ms = raw_moments(&source, config.n)?;
    let mt = raw_moments(&target, config.n)?;
    let mut profile = weight_profile(&source, &target, config.alpha, config.c_policy)?;
    if weighting == Weighting::Averaged {
        profile = profile.averaged();
    }
    Ok(Prepared {
        source,
        target,
        stats,
        ms,
        mt,
        profile,
    })
}

fn evaluate(
    source: &SampleMatrix,
    target: &SampleMatrix,
    config: &DwmdConfig,
    weighting: Weighting,
) -> Result<DiscrepancyReport> {
    let p = prepare(source, target, config, weighting)?;
    dwmd_from_moments(&p.ms, &p.mt, &p.profile, config)
}

/// Gradient of the total with respect to every entry of one sample matrix,
/// given `coef[k][j] = d total / d moment_k[j]`.
fn moment_chain(samples: &SampleMatrix, coef: &[f64], n: usize, sign: f64) -> Matrix {
    let m = samples.samples();
    let d = samples.dim();
    let scale = sign / m as f64;
    let mut grad = Matrix::zeros(m, d);
    for i in 0..m {
        let row = samples.row(i);
        let out = grad.row_mut(i);
        for j in 0..d {
            let x = row[j];
            // sum_k coef[k][j] * k * x^(k-1)
            let mut p = 1.0;
            let mut acc = 0.0;
            for k in 1..=n {
                acc += coef[(k - 1) * d + j] * k as f64 * p;
                p *= x;
            }
            out[j] = acc * scale;
        }
    }
    grad
}

fn evaluate_with_gradient(
    source: &SampleMatrix,
    target: &SampleMatrix,
    config: &DwmdConfig,
    weighting: Weighting,
) -> Result<(DiscrepancyReport, Matrix, Matrix)> {
    let p = prepare(source, target, config, weighting)?;
    let report = dwmd_from_moments(&p.ms, &p.mt, &p.profile, config)?;
    let n = config.n;
    let d = report.dim;
    let mut coef = vec![0.0; n * d];
    for k in 1..=n {
        for j in 0..d {
            let gap = p.ms.get(k, j) - p.mt.get(k, j);
            let df = fraction_derivative(gap, config.beta, p.profile.c.at(j));
            if df != 0.0 {
                coef[(k - 1) * d + j] =
                    order_weight(config.psi, k, p.profile.tau_normalized[j]) * df;
            }
        }
    }
    let mut gs = moment_chain(&p.source, &coef, n, 1.0);
    let mut gt = moment_chain(&p.target, &coef, n, -1.0);
    if let Some(stats) = &p.stats {
        // Pooled statistics are held constant: only the 1/std factor remains.
        for g in [&mut gs, &mut gt] {
            for i in 0..g.rows() {
                for (j, v) in g.row_mut(i).iter_mut().enumerate() {
                    *v /= stats.scale(j);
                }
            }
        }
    }
    Ok((report, gs, gt))
}

/// Dimensional weighted orderwise moment discrepancy truncated to `config.n` orders.
pub fn dwmd(
    source: &SampleMatrix,
    target: &SampleMatrix,
    config: &DwmdConfig,
) -> Result<DiscrepancyReport> {
    evaluate(source, target, config, Weighting::Dimensional)
}

/// [`dwmd`] together with its gradient with respect to both sample matrices.
///
/// The weight profile (`tau_normalized`, `C`) and, when standardizing, the
/// pooled statistics are treated as constants.
pub fn dwmd_with_gradient(
    source: &SampleMatrix,
    target: &SampleMatrix,
    config: &DwmdConfig,
) -> Result<(DiscrepancyReport, Matrix, Matrix)> {
    evaluate_with_gradient(source, target, config, Weighting::Dimensional)
}

pub fn dwmd_gradient(
    source: &SampleMatrix,
    target: &SampleMatrix,
    config: &DwmdConfig,
) -> Result<(Matrix, Matrix)> {
    let (_, gs, gt) = dwmd_with_gradient(source, target, config)?;
    Ok((gs, gt))
}

/// The ablation with every normalized dimensional weight replaced by their mean.
pub fn smd(
    source: &SampleMatrix,
    target: &SampleMatrix,
    config: &DwmdConfig,
) -> Result<DiscrepancyReport> {
    evaluate(source, target, config, Weighting::Averaged)
}

pub fn smd_with_gradient(
    source: &SampleMatrix,
    target: &SampleMatrix,
    config: &DwmdConfig,
) -> Result<(DiscrepancyReport, Matrix, Matrix)> {
    evaluate_with_gradient(source, target, config, Weighting::Averaged)
}

pub fn smd_gradient(
    source: &SampleMatrix,
    target: &SampleMatrix,
    config: &DwmdConfig,
) -> Result<(Matrix, Matrix)> {
    let (_, gs, gt) = smd_with_gradient(source, target, config)?;
    Ok((gs, gt))
}
