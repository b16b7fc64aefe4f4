//! Empirical raw and central moments of sample matrices.
//!
//! All statistics are accumulated in `f64` in row order. Above
//! [`COMPENSATION_THRESHOLD`] samples the per-dimension sums switch to
//! Kahan compensated summation. Powers are formed by repeated
//! multiplication, so a single-row matrix yields `x^k` exactly.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::matrix::{check_same_dim, Matrix, SampleMatrix};

/// Sample counts above this use compensated summation.
pub const COMPENSATION_THRESHOLD: usize = 1_000;

/// Per-dimension moments of orders `1..=orders`, stored order-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentSequence {
    orders: usize,
    dim: usize,
    values: Vec<f64>,
}

impl MomentSequence {
    /// Builds a sequence from order-major values (`values[(k-1)*dim + j]`).
    pub fn from_values(orders: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if orders == 0 || dim == 0 {
            return Err(invalid("orders", "moment sequences need orders >= 1 and dim >= 1"));
        }
        if values.len() != orders * dim {
            return Err(Error::ShapeData {
                rows: orders,
                cols: dim,
                len: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteMoment {
                dim: pos % dim,
                order: pos / dim + 1,
            });
        }
        Ok(Self { orders, dim, values })
    }

    pub fn orders(&self) -> usize {
        self.orders
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Moment of order `k` (1-based) in dimension `j`.
    #[inline]
    pub fn get(&self, k: usize, j: usize) -> f64 {
        debug_assert!(k >= 1 && k <= self.orders);
        self.values[(k - 1) * self.dim + j]
    }

    /// All dimensions at order `k` (1-based).
    pub fn order(&self, k: usize) -> &[f64] {
        &self.values[(k - 1) * self.dim..k * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Drops orders above `orders`.
    pub fn truncated(&self, orders: usize) -> Result<Self> {
        if orders == 0 || orders > self.orders {
            return Err(invalid("orders", "truncation must keep between 1 and the existing orders"));
        }
        Ok(Self {
            orders,
            dim: self.dim,
            values: self.values[..orders * self.dim].to_vec(),
        })
    }
}

#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    #[inline]
    fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Sums `contribution(row, j, k)` over rows into an order-major `n x d` table
/// and divides by the row count.
fn accumulate<F>(samples: &Matrix, n: usize, mut powers: F) -> Result<MomentSequence>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let m = samples.rows();
    let d = samples.cols();
    let mut row_powers = vec![0.0; n * d];
    let values = if m > COMPENSATION_THRESHOLD {
        let mut acc = vec![Kahan::default(); n * d];
        for i in 0..m {
            powers(samples.row(i), &mut row_powers);
            for (a, &p) in acc.iter_mut().zip(&row_powers) {
                a.add(p);
            }
        }
        acc.into_iter().map(|a| a.sum / m as f64).collect()
    } else {
        let mut acc = vec![0.0; n * d];
        for i in 0..m {
            powers(samples.row(i), &mut row_powers);
            for (a, &p) in acc.iter_mut().zip(&row_powers) {
                *a += p;
            }
        }
        acc.into_iter().map(|a| a / m as f64).collect()
    };
    MomentSequence::from_values(n, d, values)
}

/// Writes `x_j^k` for `k = 1..=n` into `out[(k-1)*d + j]`.
#[inline]
fn fill_powers(row: &[f64], out: &mut [f64]) {
    let d = row.len();
    for (j, &x) in row.iter().enumerate() {
        let mut p = x;
        out[j] = p;
        for k in 1..out.len() / d {
            p *= x;
            out[k * d + j] = p;
        }
    }
}

/// Column means, with the same summation policy as the moment routines.
pub fn column_means(samples: &SampleMatrix) -> Result<Vec<f64>> {
    Ok(accumulate(samples, 1, fill_powers)?.values)
}

/// Empirical raw moments `E[X_j^k]` for `k = 1..=n`.
pub fn raw_moments(samples: &SampleMatrix, n: usize) -> Result<MomentSequence> {
    if n == 0 {
        return Err(invalid("n", "moment order must be >= 1"));
    }
    accumulate(samples, n, fill_powers)
}

/// Column means at order 1, then `E[(X_j - mean_j)^k]` for `k = 2..=n`.
pub fn central_moments(samples: &SampleMatrix, n: usize) -> Result<MomentSequence> {
    if n == 0 {
        return Err(invalid("n", "moment order must be >= 1"));
    }
    let means = column_means(samples)?;
    let d = samples.dim();
    let mut centred = vec![0.0; d];
    let mut seq = accumulate(samples, n, |row, out| {
        for ((c, &x), &mu) in centred.iter_mut().zip(row).zip(&means) {
            *c = x - mu;
        }
        fill_powers(&centred, out);
    })?;
    seq.values[..d].copy_from_slice(&means);
    Ok(seq)
}

/// Per-dimension statistics used by [`standardize_pooled`].
#[derive(Debug, Clone, PartialEq)]
pub struct PooledStats {
    pub mean: Vec<f64>,
    /// Population standard deviation over the union of both samples.
    pub std: Vec<f64>,
}

impl PooledStats {
    pub fn compute(source: &SampleMatrix, target: &SampleMatrix) -> Result<Self> {
        let d = check_same_dim(source, target)?;
        let total = (source.samples() + target.samples()) as f64;
        let mut mean = vec![0.0; d];
        for m in [source, target] {
            for i in 0..m.samples() {
                for (acc, v) in mean.iter_mut().zip(m.row(i)) {
                    *acc += v;
                }
            }
        }
        for v in &mut mean {
            *v /= total;
        }
        let mut var = vec![0.0; d];
        for m in [source, target] {
            for i in 0..m.samples() {
                for ((acc, v), mu) in var.iter_mut().zip(m.row(i)).zip(&mean) {
                    let c = v - mu;
                    *acc += c * c;
                }
            }
        }
        let std = var.into_iter().map(|v| libm::sqrt(v / total)).collect();
        Ok(Self { mean, std })
    }

    /// Scale applied in dimension `j`: the pooled std, or 1 for degenerate columns.
    #[inline]
    pub fn scale(&self, j: usize) -> f64 {
        if self.std[j] > 0.0 {
            self.std[j]
        } else {
            1.0
        }
    }

    pub fn apply(&self, samples: &SampleMatrix) -> Result<SampleMatrix> {
        let mut out = samples.matrix().clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.scale(j);
            }
        }
        SampleMatrix::new(out)
    }
}

/// Shifts and scales both matrices by the pooled per-dimension mean and
/// standard deviation. Zero-variance dimensions are only shifted.
pub fn standardize_pooled(
    source: &SampleMatrix,
    target: &SampleMatrix,
) -> Result<(SampleMatrix, SampleMatrix)> {
    let stats = PooledStats::compute(source, target)?;
    Ok((stats.apply(source)?, stats.apply(target)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(values: &[f64]) -> SampleMatrix {
        SampleMatrix::from_vec(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn raw_moments_two_points() {
        let m = raw_moments(&col(&[0.0, 2.0]), 3).unwrap();
        assert_eq!(m.values(), &[1.0, 2.0, 4.0]);
    }

    #[test]
    fn first_raw_moment_is_column_mean() {
        let s = SampleMatrix::from_rows(&[[1.0, -2.0], [3.0, 5.0], [8.0, 0.5]]).unwrap();
        let m = raw_moments(&s, 1).unwrap();
        assert_eq!(m.order(1), &[4.0, 3.5 / 3.0]);
        assert_eq!(m.order(1), column_means(&s).unwrap().as_slice());
    }

    #[test]
    fn central_moments_two_points_and_constant() {
        let m = central_moments(&col(&[0.0, 2.0]), 2).unwrap();
        assert_eq!(m.values(), &[1.0, 1.0]);
        let c = central_moments(&col(&[3.5; 7]), 4).unwrap();
        assert_eq!(c.get(1, 0), 3.5);
        for k in 2..=4 {
            assert_eq!(c.get(k, 0), 0.0);
        }
    }

    #[test]
    fn zero_order_rejected() {
        assert!(raw_moments(&col(&[1.0]), 0).is_err());
        assert!(central_moments(&col(&[1.0]), 0).is_err());
    }

    #[test]
    fn overflow_names_dimension_and_order() {
        let s = SampleMatrix::from_rows(&[[1.0, 1e100], [2.0, 1e100]]).unwrap();
        assert_eq!(
            raw_moments(&s, 5),
            Err(Error::NonFiniteMoment { dim: 1, order: 4 })
        );
    }

    #[test]
    fn compensated_path_matches_plain_path() {
        let values: Vec<f64> = (0..1001).map(|i| 0.1 * (i % 17) as f64 - 0.7).collect();
        let big = raw_moments(&col(&values), 4).unwrap();
        let plain: Vec<f64> = (1..=4)
            .map(|k| values.iter().map(|x| libm::pow(*x, k as f64)).sum::<f64>() / 1001.0)
            .collect();
        for k in 1..=4 {
            assert!((big.get(k, 0) - plain[k - 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_two_points() {
        let (s, t) = standardize_pooled(&col(&[0.0]), &col(&[2.0])).unwrap();
        assert_eq!(s.as_slice(), &[-1.0]);
        assert_eq!(t.as_slice(), &[1.0]);
    }

    #[test]
    fn standardize_constant_is_shift_only() {
        let a = SampleMatrix::from_rows(&[[4.0, -1.0], [4.0, -1.0]]).unwrap();
        let (s, t) = standardize_pooled(&a, &a).unwrap();
        assert_eq!(s.as_slice(), &[0.0; 4]);
        assert_eq!(s, t);
    }

    #[test]
    fn standardize_dimension_mismatch() {
        let a = SampleMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let b = col(&[1.0]);
        assert_eq!(
            standardize_pooled(&a, &b),
            Err(Error::DimensionMismatch {
                source_dim: 2,
                target_dim: 1
            })
        );
    }
}
