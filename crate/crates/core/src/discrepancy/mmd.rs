use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::matrix::{check_same_dim, Matrix, SampleMatrix};

/// Rows taken from each domain when estimating the median pairwise distance.
pub const MEDIAN_SUBSAMPLE: usize = 500;

/// Gaussian kernel bandwidth `sigma` in `exp(-|x - y|^2 / (2 sigma^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Bandwidth {
    Fixed { sigma: f64 },
    /// Median pairwise distance of the pooled samples.
    #[default]
    MedianHeuristic,
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median pairwise Euclidean distance over the first [`MEDIAN_SUBSAMPLE`]
/// rows of each domain. Falls back to 1 when the median is 0.
pub fn median_heuristic(source: &SampleMatrix, target: &SampleMatrix) -> Result<f64> {
    check_same_dim(source, target)?;
    let rows: Vec<&[f64]> = (0..source.samples().min(MEDIAN_SUBSAMPLE))
        .map(|i| source.row(i))
        .chain((0..target.samples().min(MEDIAN_SUBSAMPLE)).map(|i| target.row(i)))
        .collect();
    let mut dists = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            dists.push(libm::sqrt(sq_dist(rows[i], rows[j])));
        }
    }
    if dists.is_empty() {
        return Ok(1.0);
    }
    dists.sort_by(f64::total_cmp);
    let n = dists.len();
    let med = if n % 2 == 1 {
        dists[n / 2]
    } else {
        0.5 * (dists[n / 2 - 1] + dists[n / 2])
    };
    Ok(if med > 0.0 { med } else { 1.0 })
}

fn resolve(bandwidth: Bandwidth, source: &SampleMatrix, target: &SampleMatrix) -> Result<f64> {
    match bandwidth {
        Bandwidth::Fixed { sigma } if sigma > 0.0 && sigma.is_finite() => Ok(sigma),
        Bandwidth::Fixed { sigma } => Err(invalid("bandwidth", format!("{sigma} must be positive"))),
        Bandwidth::MedianHeuristic => median_heuristic(source, target),
    }
}

/// Mean kernel value between all rows of `a` and `b`.
fn mean_kernel(a: &Matrix, b: &Matrix, gamma: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.rows() {
        for j in 0..b.rows() {
            acc += libm::exp(-gamma * sq_dist(a.row(i), b.row(j)));
        }
    }
    acc / (a.rows() * b.rows()) as f64
}

/// Biased (V-statistic) squared MMD with a Gaussian kernel.
pub fn mmd_rbf(source: &SampleMatrix, target: &SampleMatrix, bandwidth: Bandwidth) -> Result<f64> {
    check_same_dim(source, target)?;
    let sigma = resolve(bandwidth, source, target)?;
    let gamma = 1.0 / (2.0 * sigma * sigma);
    let kss = mean_kernel(source, source, gamma);
    let ktt = mean_kernel(target, target, gamma);
    let kst = mean_kernel(source, target, gamma);
    Ok((kss + ktt - 2.0 * kst).max(0.0))
}

/// Adds `scale * sum_j k(x_i, y_j) * (x_i - y_j)` into row `i` of `grad`.
fn accumulate_pull(grad: &mut Matrix, xs: &Matrix, ys: &Matrix, gamma: f64, scale: f64) -> f64 {
    let mut ksum = 0.0;
    for i in 0..xs.rows() {
        let xi = xs.row(i);
        for j in 0..ys.rows() {
            let yj = ys.row(j);
            let k = libm::exp(-gamma * sq_dist(xi, yj));
            ksum += k;
            let out = grad.row_mut(i);
            for ((o, a), b) in out.iter_mut().zip(xi).zip(yj) {
                *o += scale * k * (a - b);
            }
        }
    }
    ksum
}

/// [`mmd_rbf`] with its gradient; the bandwidth is held constant.
pub fn mmd_rbf_with_gradient(
    source: &SampleMatrix,
    target: &SampleMatrix,
    bandwidth: Bandwidth,
) -> Result<(f64, Matrix, Matrix)> {
    check_same_dim(source, target)?;
    let sigma = resolve(bandwidth, source, target)?;
    let gamma = 1.0 / (2.0 * sigma * sigma);
    let (ms, mt) = (source.samples() as f64, target.samples() as f64);
    let d = source.dim();
    // d/dx_a exp(-gamma |x_a - y|^2) = -2 gamma k (x_a - y)
    let mut gs = Matrix::zeros(source.samples(), d);
    let mut gt = Matrix::zeros(target.samples(), d);
    let kss = accumulate_pull(&mut gs, source, source, gamma, -4.0 * gamma / (ms * ms));
    let kst = accumulate_pull(&mut gs, source, target, gamma, 4.0 * gamma / (ms * mt));
    let ktt = accumulate_pull(&mut gt, target, target, gamma, -4.0 * gamma / (mt * mt));
    accumulate_pull(&mut gt, target, source, gamma, 4.0 * gamma / (ms * mt));
    let value = kss / (ms * ms) + ktt / (mt * mt) - 2.0 * kst / (ms * mt);
    Ok((value.max(0.0), gs, gt))
}
