use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{check_labels, Gradients, Layer, Network, NetworkSpec};
use crate::discrepancy::{Bandwidth, DwmdConfig, IntervalWidth};
use crate::error::{invalid, Error, Result};
use crate::matrix::{Matrix, SampleMatrix};
use crate::regularizer::{Regularizer, RegularizerKind};

/// Smallest per-domain batch for regularizers that trim outliers per batch.
pub const MIN_TRIMMED_BATCH: usize = 20;

const INIT_STREAM: u64 = 0;
const SOURCE_STREAM: u64 = 1;
const TARGET_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Optimizer {
    #[default]
    Sgd,
    SgdMomentum { momentum: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct TrainConfig {
    /// Penalty on the regularizer.
    pub lambda: f64,
    pub regularizer: RegularizerKind,
    pub dwmd: DwmdConfig,
    pub cmd_width: IntervalWidth,
    pub mmd_bandwidth: Bandwidth,
    pub epochs: usize,
    /// Per-domain batch size.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            regularizer: RegularizerKind::Dwmd,
            dwmd: DwmdConfig::default(),
            cmd_width: IntervalWidth::PooledRange,
            mmd_bandwidth: Bandwidth::MedianHeuristic,
            epochs: 30,
            batch_size: 64,
            learning_rate: 0.5,
            optimizer: Optimizer::Sgd,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda", format!("{} must be finite and >= 0", self.lambda)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning_rate", format!("{} must be positive", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch_size", "must be >= 1"));
        }
        if self.regularizer.needs_trimming() && self.batch_size < MIN_TRIMMED_BATCH {
            return Err(Error::TooFewSamples {
                found: self.batch_size,
                needed: MIN_TRIMMED_BATCH,
                context: "batch size for per-batch trimmed means",
            });
        }
        if let Optimizer::SgdMomentum { momentum } = self.optimizer {
            if !(0.0..1.0).contains(&momentum) {
                return Err(invalid("momentum", format!("{momentum} is outside [0, 1)")));
            }
        }
        self.dwmd.validate()
    }

    pub fn regularizer(&self) -> Regularizer {
        Regularizer {
            kind: self.regularizer,
            dwmd: self.dwmd,
            cmd_width: self.cmd_width,
            mmd_bandwidth: self.mmd_bandwidth,
        }
    }
}

/// Per-epoch training trace.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainHistory {
    /// Mean source cross-entropy over the epoch's batches.
    pub source_loss: Vec<f64>,
    /// Mean regularizer value per matched layer over the epoch's batches
    /// (empty inner vectors when the regularizer is `none`).
    pub regularizer: Vec<Vec<f64>>,
    /// Target accuracy after each epoch; empty without evaluation labels.
    pub target_accuracy: Vec<f64>,
}

impl TrainHistory {
    /// Sum over matched layers at each epoch.
    pub fn regularizer_totals(&self) -> Vec<f64> {
        self.regularizer.iter().map(|r| r.iter().fold(0.0, |a, b| a + b)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainedModel {
    pub network: Network,
    pub history: TrainHistory,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Parameter update rule with its state.
struct Stepper {
    optimizer: Optimizer,
    learning_rate: f64,
    velocity: Option<Gradients>,
}

impl Stepper {
    fn new(cfg: &TrainConfig, net: &Network) -> Self {
        let velocity = match cfg.optimizer {
            Optimizer::Sgd => None,
            Optimizer::SgdMomentum { .. } => Some(
                net.layers
                    .iter()
                    .map(|l| Layer {
                        weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
                        bias: alloc::vec![0.0; l.bias.len()],
                    })
                    .collect(),
            ),
        };
        Self {
            optimizer: cfg.optimizer,
            learning_rate: cfg.learning_rate,
            velocity,
        }
    }

    fn apply(&mut self, net: &mut Network, grads: &Gradients) {
        let lr = self.learning_rate;
        match (&self.optimizer, &mut self.velocity) {
            (Optimizer::SgdMomentum { momentum }, Some(vel)) => {
                for ((layer, g), v) in net.layers.iter_mut().zip(grads).zip(vel.iter_mut()) {
                    let pairs = layer
                        .weights
                        .as_mut_slice()
                        .iter_mut()
                        .zip(g.weights.as_slice())
                        .zip(v.weights.as_mut_slice())
                        .chain(layer.bias.iter_mut().zip(&g.bias).zip(v.bias.iter_mut()));
                    for ((w, gw), vw) in pairs {
                        *vw = momentum * *vw + gw;
                        *w -= lr * *vw;
                    }
                }
            }
            _ => {
                for (layer, g) in net.layers.iter_mut().zip(grads) {
                    for (w, gw) in layer.weights.as_mut_slice().iter_mut().zip(g.weights.as_slice()) {
                        *w -= lr * gw;
                    }
                    for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                        *b -= lr * gb;
                    }
                }
            }
        }
    }
}

/// Fraction of argmax predictions equal to `labels`.
pub fn evaluate(network: &Network, samples: &SampleMatrix, labels: &[usize]) -> Result<f64> {
    check_labels(labels, samples.samples(), network.spec.classes())?;
    let predicted = network.predict(samples)?;
    let hits = predicted.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Minibatch training on labeled source data with a discrepancy regularizer
/// between source and target hidden activations.
///
/// Each epoch shuffles both domains independently and runs
/// `max(m_S, m_T) / batch_size` steps; the shorter domain wraps around.
/// `target_eval_labels` only feeds the per-epoch accuracy trace.
pub fn train_uda(
    source: &SampleMatrix,
    source_labels: &[usize],
    target: &SampleMatrix,
    target_eval_labels: Option<&[usize]>,
    spec: &NetworkSpec,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    cfg.validate()?;
    spec.validate()?;
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            source_dim: source.dim(),
            target_dim: target.dim(),
        });
    }
    if source.dim() != spec.input_dim() {
        return Err(Error::ShapeMismatch {
            what: format!("data has {} columns, network input width is {}", source.dim(), spec.input_dim()),
        });
    }
    check_labels(source_labels, source.samples(), spec.classes())?;
    if let Some(l) = target_eval_labels {
        check_labels(l, target.samples(), spec.classes())?;
    }
    let smallest = source.samples().min(target.samples());
    if cfg.batch_size > smallest {
        return Err(Error::TooFewSamples {
            found: smallest,
            needed: cfg.batch_size,
            context: "each domain must hold at least one batch",
        });
    }

    let mut network = Network::init(spec.clone(), &mut rng_for(cfg.seed, INIT_STREAM))?;
    let mut source_rng = rng_for(cfg.seed, SOURCE_STREAM);
    let mut target_rng = rng_for(cfg.seed, TARGET_STREAM);
    let mut stepper = Stepper::new(cfg, &network);
    let regularizer = cfg.regularizer();
    let b = cfg.batch_size;
    let steps = (source.samples().max(target.samples()) / b).max(1);
    let matched = spec.matched_layers.len();

    let mut source_order: Vec<usize> = (0..source.samples()).collect();
    let mut target_order: Vec<usize> = (0..target.samples()).collect();
    let mut history = TrainHistory::default();
    let mut batch_labels = Vec::with_capacity(b);
    let mut source_idx = Vec::with_capacity(b);
    let mut target_idx = Vec::with_capacity(b);

    for epoch in 0..cfg.epochs {
        source_order.shuffle(&mut source_rng);
        target_order.shuffle(&mut target_rng);
        let mut loss_sum = 0.0;
        let mut reg_sum = alloc::vec![0.0; matched];
        let mut reg_seen = false;
        for step in 0..steps {
            source_idx.clear();
            target_idx.clear();
            batch_labels.clear();
            for r in 0..b {
                let s = source_order[(step * b + r) % source_order.len()];
                source_idx.push(s);
                batch_labels.push(source_labels[s]);
                target_idx.push(target_order[(step * b + r) % target_order.len()]);
            }
            let xs = source.matrix().select_rows(&source_idx);
            let xt = target.matrix().select_rows(&target_idx);
            let eval = network
                .objective(&xs, &batch_labels, &xt, &regularizer, cfg.lambda)
                .map_err(|e| match e {
                    Error::NonFiniteEntry { .. } | Error::NonFiniteMoment { .. } => Error::Diverged {
                        epoch,
                        batch: step,
                        quantity: "activation or moment",
                    },
                    other => other,
                })?;
            if !eval.objective.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: step,
                    quantity: "loss",
                });
            }
            loss_sum += eval.source_loss;
            for (acc, v) in reg_sum.iter_mut().zip(&eval.regularizer) {
                *acc += v;
                reg_seen = true;
            }
            stepper.apply(&mut network, &eval.gradients);
            if network.layers.iter().any(|l| !l.weights.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    batch: step,
                    quantity: "weights",
                });
            }
        }
        history.source_loss.push(loss_sum / steps as f64);
        history.regularizer.push(if reg_seen {
            reg_sum.into_iter().map(|v| v / steps as f64).collect()
        } else {
            Vec::new()
        });
        if let Some(labels) = target_eval_labels {
            history.target_accuracy.push(evaluate(&network, target, labels)?);
        }
    }
    Ok(TrainedModel { network, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nettrain::Activation;

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let base = TrainConfig::default();
        assert!(TrainConfig { batch_size: 10, ..base }.validate().is_err());
        assert!(TrainConfig {
            batch_size: 10,
            regularizer: RegularizerKind::Cmd,
            ..base
        }
        .validate()
        .is_ok());
        assert!(TrainConfig { lambda: -1.0, ..base }.validate().is_err());
        assert!(TrainConfig { learning_rate: 0.0, ..base }.validate().is_err());
        assert!(TrainConfig {
            optimizer: Optimizer::SgdMomentum { momentum: 1.0 },
            ..base
        }
        .validate()
        .is_err());
    }

    #[test]
    fn evaluate_single_class_uniform_model() {
        let spec = NetworkSpec::new(alloc::vec![2, 3, 3], alloc::vec![Activation::Sigmoid], alloc::vec![0]).unwrap();
        let net = Network::zeros(spec).unwrap();
        let x = SampleMatrix::from_rows(&[[1.0, 2.0], [0.0, -1.0]]).unwrap();
        assert_eq!(evaluate(&net, &x, &[0, 0]).unwrap(), 1.0);
        assert_eq!(evaluate(&net, &x, &[0, 2]).unwrap(), 0.5);
        assert!(evaluate(&net, &x, &[0]).is_err());
        assert!(matches!(evaluate(&net, &x, &[0, 3]), Err(Error::LabelOutOfRange { .. })));
    }
}
