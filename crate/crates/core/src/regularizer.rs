//! Discrepancy regularizers on hidden activations: value plus gradient with
//! respect to the source and target activation matrices.

use crate::discrepancy::{
    cmd_with_gradient, dwmd_with_gradient, mmd_rbf_with_gradient, smd_with_gradient, Bandwidth,
    DwmdConfig, IntervalWidth,
};
use crate::error::Result;
use crate::matrix::{Matrix, SampleMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RegularizerKind {
    #[default]
    Dwmd,
    Smd,
    Cmd,
    Mmd,
    None,
}

impl RegularizerKind {
    /// Whether the regularizer estimates robust (trimmed) means per batch.
    pub fn needs_trimming(self) -> bool {
        matches!(self, RegularizerKind::Dwmd | RegularizerKind::Smd)
    }
}

/// A fully parameterized regularizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularizer {
    pub kind: RegularizerKind,
    /// Series parameters; `n` is also the CMD order.
    pub dwmd: DwmdConfig,
    pub cmd_width: IntervalWidth,
    pub mmd_bandwidth: Bandwidth,
}

/// Regularizer value and its gradients.
#[derive(Debug, Clone)]
pub struct RegularizerEval {
    pub value: f64,
    pub grad_source: Matrix,
    pub grad_target: Matrix,
}

impl Regularizer {
    pub fn evaluate(&self, source: &SampleMatrix, target: &SampleMatrix) -> Result<RegularizerEval> {
        let (value, grad_source, grad_target) = match self.kind {
            RegularizerKind::Dwmd => {
                let (r, gs, gt) = dwmd_with_gradient(source, target, &self.dwmd)?;
                (r.total, gs, gt)
            }
            RegularizerKind::Smd => {
                let (r, gs, gt) = smd_with_gradient(source, target, &self.dwmd)?;
                (r.total, gs, gt)
            }
            RegularizerKind::Cmd => cmd_with_gradient(source, target, self.dwmd.n, self.cmd_width)?,
            RegularizerKind::Mmd => mmd_rbf_with_gradient(source, target, self.mmd_bandwidth)?,
            RegularizerKind::None => (
                0.0,
                Matrix::zeros(source.samples(), source.dim()),
                Matrix::zeros(target.samples(), target.dim()),
            ),
        };
        Ok(RegularizerEval {
            value,
            grad_source,
            grad_target,
        })
    }
}
