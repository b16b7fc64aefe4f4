use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::matrix::{check_same_dim, Matrix, SampleMatrix};
use crate::moments::central_moments;

/// Interval width `|b - a|` dividing each order of the central moment discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum IntervalWidth {
    /// No scaling.
    Unit,
    /// Per-dimension range of the pooled samples; zero ranges fall back to 1.
    #[default]
    PooledRange,
    Fixed { width: f64 },
}

impl IntervalWidth {
    fn resolve(&self, source: &SampleMatrix, target: &SampleMatrix) -> Result<Vec<f64>> {
        let d = source.dim();
        match *self {
            IntervalWidth::Unit => Ok(vec![1.0; d]),
            IntervalWidth::Fixed { width } => {
                if !(width > 0.0 && width.is_finite()) {
                    return Err(invalid("width", format!("{width} must be positive")));
                }
                Ok(vec![width; d])
            }
            IntervalWidth::PooledRange => {
                let mut lo = vec![f64::INFINITY; d];
                let mut hi = vec![f64::NEG_INFINITY; d];
                for m in [source, target] {
                    for i in 0..m.samples() {
                        for (j, &v) in m.row(i).iter().enumerate() {
                            lo[j] = lo[j].min(v);
                            hi[j] = hi[j].max(v);
                        }
                    }
                }
                Ok(lo
                    .iter()
                    .zip(&hi)
                    .map(|(a, b)| if b > a { b - a } else { 1.0 })
                    .collect())
            }
        }
    }
}

struct CmdParts {
    widths: Vec<f64>,
    /// Order-major scaled gaps `(c_S - c_T) / w^r`.
    scaled: Vec<f64>,
    /// Euclidean norm per order.
    norms: Vec<f64>,
}

fn parts(
    source: &SampleMatrix,
    target: &SampleMatrix,
    k: usize,
    width: IntervalWidth,
) -> Result<(CmdParts, crate::moments::MomentSequence, crate::moments::MomentSequence)> {
    if k == 0 {
        return Err(invalid("k", "order must be >= 1"));
    }
    let d = check_same_dim(source, target)?;
    let widths = width.resolve(source, target)?;
    let cs = central_moments(source, k)?;
    let ct = central_moments(target, k)?;
    let mut scaled = Vec::with_capacity(k * d);
    let mut norms = Vec::with_capacity(k);
    for r in 1..=k {
        let mut sq = 0.0;
        for j in 0..d {
            let u = (cs.get(r, j) - ct.get(r, j)) / libm::pow(widths[j], r as f64);
            sq += u * u;
            scaled.push(u);
        }
        norms.push(libm::sqrt(sq));
    }
    Ok((
        CmdParts {
            widths,
            scaled,
            norms,
        },
        cs,
        ct,
    ))
}

/// Central moment discrepancy up to order `k`: the scaled mean-gap norm plus
/// the scaled central-moment-gap norms for orders `2..=k`.
pub fn cmd(source: &SampleMatrix, target: &SampleMatrix, k: usize, width: IntervalWidth) -> Result<f64> {
    let (p, _, _) = parts(source, target, k, width)?;
    Ok(p.norms.iter().sum())
}

fn chain(
    samples: &SampleMatrix,
    moments: &crate::moments::MomentSequence,
    p: &CmdParts,
    k: usize,
    sign: f64,
) -> Matrix {
    let m = samples.samples();
    let d = samples.dim();
    let inv_m = 1.0 / m as f64;
    // coef[r][j] = d cmd / d c_r[j]
    let mut coef = vec![0.0; k * d];
    for r in 1..=k {
        let norm = p.norms[r - 1];
        if norm == 0.0 {
            continue;
        }
        for j in 0..d {
            let u = p.scaled[(r - 1) * d + j];
            coef[(r - 1) * d + j] = sign * u / (norm * libm::pow(p.widths[j], r as f64));
        }
    }
    let mut grad = Matrix::zeros(m, d);
    for i in 0..m {
        let row = samples.row(i);
        let out = grad.row_mut(i);
        for j in 0..d {
            let c = row[j] - moments.get(1, j);
            // d c_1 / d x = 1/m; d c_r / d x = r/m * ((x - mu)^(r-1) - c_{r-1}), c_1 := 0 there
            let mut acc = coef[j] * inv_m;
            let mut p_prev = 1.0;
            for r in 2..=k {
                p_prev *= c;
                let lower = if r == 2 { 0.0 } else { moments.get(r - 1, j) };
                acc += coef[(r - 1) * d + j] * r as f64 * inv_m * (p_prev - lower);
            }
            out[j] = acc;
        }
    }
    grad
}

/// [`cmd`] with its gradient; interval widths are held constant.
pub fn cmd_with_gradient(
    source: &SampleMatrix,
    target: &SampleMatrix,
    k: usize,
    width: IntervalWidth,
) -> Result<(f64, Matrix, Matrix)> {
    let (p, cs, ct) = parts(source, target, k, width)?;
    let gs = chain(source, &cs, &p, k, 1.0);
    let gt = chain(target, &ct, &p, k, -1.0);
    Ok((p.norms.iter().sum(), gs, gt))
}
