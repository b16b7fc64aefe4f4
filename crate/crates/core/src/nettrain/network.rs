use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::matrix::{Matrix, SampleMatrix};
use crate::regularizer::Regularizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Activation {
    Sigmoid,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + libm::exp(-z)),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Layer widths, hidden activations and the hidden layers fed to the regularizer.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct NetworkSpec {
    /// Input width, hidden widths, class count.
    pub layer_sizes: Vec<usize>,
    /// One per hidden layer.
    pub activations: Vec<Activation>,
    /// 0-based hidden layer indices.
    pub matched_layers: Vec<usize>,
}

impl NetworkSpec {
    pub fn new(layer_sizes: Vec<usize>, activations: Vec<Activation>, matched_layers: Vec<usize>) -> Result<Self> {
        let spec = Self {
            layer_sizes,
            activations,
            matched_layers,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 3 {
            return Err(invalid("layer_sizes", "need input, at least one hidden layer, and output"));
        }
        if self.layer_sizes.contains(&0) {
            return Err(invalid("layer_sizes", "every width must be >= 1"));
        }
        if self.activations.len() != self.hidden_layers() {
            return Err(invalid(
                "activations",
                format!("{} given for {} hidden layers", self.activations.len(), self.hidden_layers()),
            ));
        }
        if self.matched_layers.is_empty() {
            return Err(invalid("matched_layers", "at least one hidden layer must be matched"));
        }
        for (i, &l) in self.matched_layers.iter().enumerate() {
            if l >= self.hidden_layers() {
                return Err(invalid("matched_layers", format!("layer {l} is out of range")));
            }
            if self.matched_layers[..i].contains(&l) {
                return Err(invalid("matched_layers", format!("layer {l} listed twice")));
            }
        }
        Ok(())
    }

    pub fn hidden_layers(&self) -> usize {
        self.layer_sizes.len() - 2
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn classes(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Layer {
    /// `fan_in x fan_out`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// A fully connected classifier with softmax output.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Network {
    pub spec: NetworkSpec,
    pub layers: Vec<Layer>,
}

/// Hidden activations (post-nonlinearity) and class probabilities.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub hidden: Vec<Matrix>,
    pub probs: Matrix,
}

/// Parameter gradients, one entry per layer.
pub type Gradients = Vec<Layer>;

/// Objective value and gradient for one source/target batch pair.
#[derive(Debug, Clone)]
pub struct ObjectiveEval {
    /// Mean cross-entropy on the source batch.
    pub source_loss: f64,
    /// Regularizer value per matched layer, in `matched_layers` order.
    pub regularizer: Vec<f64>,
    /// `source_loss + lambda * sum(regularizer)`.
    pub objective: f64,
    pub gradients: Gradients,
}

impl Network {
    /// All weights and biases zero.
    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layer_sizes
            .windows(2)
            .map(|w| Layer {
                weights: Matrix::zeros(w[0], w[1]),
                bias: vec![0.0; w[1]],
            })
            .collect();
        Ok(Self { spec, layers })
    }

    /// Uniform `[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))]` weights, zero biases.
    pub fn init<R: Rng + ?Sized>(spec: NetworkSpec, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(spec)?;
        for layer in &mut net.layers {
            let (fan_in, fan_out) = (layer.weights.rows(), layer.weights.cols());
            let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            for w in layer.weights.as_mut_slice() {
                *w = rng.random_range(-limit..=limit);
            }
        }
        Ok(net)
    }

    fn affine(layer: &Layer, input: &Matrix) -> Matrix {
        let mut z = input.matmul(&layer.weights);
        for i in 0..z.rows() {
            for (v, b) in z.row_mut(i).iter_mut().zip(&layer.bias) {
                *v += b;
            }
        }
        z
    }

    /// Hidden activations up to and including hidden layer `depth - 1`.
    fn hidden_forward(&self, batch: &Matrix, depth: usize) -> Vec<Matrix> {
        let mut hidden: Vec<Matrix> = Vec::with_capacity(depth);
        for h in 0..depth {
            let input = if h == 0 { batch } else { &hidden[h - 1] };
            let mut a = Self::affine(&self.layers[h], input);
            let act = self.spec.activations[h];
            for v in a.as_mut_slice() {
                *v = act.apply(*v);
            }
            hidden.push(a);
        }
        hidden
    }

    fn check_width(&self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.spec.input_dim() {
            return Err(Error::ShapeMismatch {
                what: format!(
                    "batch has {} columns, network input width is {}",
                    batch.cols(),
                    self.spec.input_dim()
                ),
            });
        }
        Ok(())
    }

    pub fn forward(&self, batch: &Matrix) -> Result<ForwardPass> {
        self.check_width(batch)?;
        let hidden = self.hidden_forward(batch, self.spec.hidden_layers());
        let mut probs = Self::affine(self.layers.last().unwrap(), hidden.last().unwrap());
        for i in 0..probs.rows() {
            softmax_in_place(probs.row_mut(i));
        }
        Ok(ForwardPass { hidden, probs })
    }

    /// Argmax class per row, lowest index on ties.
    pub fn predict(&self, batch: &Matrix) -> Result<Vec<usize>> {
        let pass = self.forward(batch)?;
        Ok((0..pass.probs.rows()).map(|i| argmax(pass.probs.row(i))).collect())
    }

    /// Source cross-entropy plus `lambda` times the regularizer summed over
    /// matched layers, with the gradient of that objective.
    ///
    /// When `lambda == 0` the regularizer is still evaluated for reporting
    /// but contributes nothing to the gradient.
    pub fn objective(
        &self,
        source: &Matrix,
        labels: &[usize],
        target: &Matrix,
        regularizer: &Regularizer,
        lambda: f64,
    ) -> Result<ObjectiveEval> {
        self.check_width(source)?;
        self.check_width(target)?;
        check_labels(labels, source.rows(), self.spec.classes())?;
        let hidden_count = self.spec.hidden_layers();
        let src = self.forward(source)?;
        let m = source.rows() as f64;

        let mut source_loss = 0.0;
        let mut d_out = src.probs.clone();
        for (i, &y) in labels.iter().enumerate() {
            source_loss -= libm::log(src.probs.get(i, y).max(f64::MIN_POSITIVE));
            let row = d_out.row_mut(i);
            row[y] -= 1.0;
            for v in row.iter_mut() {
                *v /= m;
            }
        }
        source_loss /= m;

        let regularize = !matches!(regularizer.kind, crate::regularizer::RegularizerKind::None);
        let deepest = self.spec.matched_layers.iter().copied().max().unwrap_or(0);
        let tgt_hidden = if regularize {
            self.hidden_forward(target, deepest + 1)
        } else {
            Vec::new()
        };

        let mut reg_values = Vec::with_capacity(self.spec.matched_layers.len());
        let mut src_push: Vec<Option<Matrix>> = vec![None; hidden_count];
        let mut tgt_push: Vec<Option<Matrix>> = vec![None; hidden_count];
        if regularize {
            for &l in &self.spec.matched_layers {
                let a_s = SampleMatrix::new(src.hidden[l].clone())?;
                let a_t = SampleMatrix::new(tgt_hidden[l].clone())?;
                let eval = regularizer.evaluate(&a_s, &a_t)?;
                reg_values.push(eval.value);
                if lambda != 0.0 {
                    let mut gs = eval.grad_source;
                    let mut gt = eval.grad_target;
                    gs.scale(lambda);
                    gt.scale(lambda);
                    src_push[l] = Some(gs);
                    tgt_push[l] = Some(gt);
                }
            }
        }

        let mut gradients: Gradients = self
            .layers
            .iter()
            .map(|l| Layer {
                weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
                bias: vec![0.0; l.bias.len()],
            })
            .collect();

        // source path: output layer, then every hidden layer
        let out_layer = hidden_count;
        gradients[out_layer].weights = src.hidden[hidden_count - 1].t_matmul(&d_out);
        gradients[out_layer].bias = d_out.sum_rows();
        let upstream = d_out.matmul_t(&self.layers[out_layer].weights);
        self.backprop_hidden(source, &src.hidden, upstream, hidden_count, &mut src_push, &mut gradients);

        // target path: only through matched layers
        if regularize && lambda != 0.0 {
            let top = tgt_push[deepest].take().unwrap();
            self.backprop_hidden(target, &tgt_hidden, top, deepest + 1, &mut tgt_push, &mut gradients);
        }

        let reg_sum: f64 = reg_values.iter().sum();
        Ok(ObjectiveEval {
            source_loss,
            objective: source_loss + lambda * reg_sum,
            regularizer: reg_values,
            gradients,
        })
    }

    /// Backpropagates `d_top` (gradient w.r.t. the output of hidden layer
    /// `depth - 1`) down to the input, adding `extra[h]` at each hidden layer.
    fn backprop_hidden(
        &self,
        input: &Matrix,
        hidden: &[Matrix],
        d_top: Matrix,
        depth: usize,
        extra: &mut [Option<Matrix>],
        gradients: &mut Gradients,
    ) {
        let mut d_a = d_top;
        for h in (0..depth).rev() {
            if let Some(e) = extra[h].take() {
                d_a.add_assign(&e);
            }
            let act = self.spec.activations[h];
            let a = &hidden[h];
            for (g, &v) in d_a.as_mut_slice().iter_mut().zip(a.as_slice()) {
                *g *= act.derivative_from_output(v);
            }
            let prev = if h == 0 { input } else { &hidden[h - 1] };
            gradients[h].weights.add_assign(&prev.t_matmul(&d_a));
            for (b, v) in gradients[h].bias.iter_mut().zip(d_a.sum_rows()) {
                *b += v;
            }
            if h > 0 {
                d_a = d_a.matmul_t(&self.layers[h].weights);
            }
        }
    }
}

pub(crate) fn check_labels(labels: &[usize], rows: usize, classes: usize) -> Result<()> {
    if labels.len() != rows {
        return Err(Error::ShapeMismatch {
            what: format!("{} labels for {} samples", labels.len(), rows),
        });
    }
    if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
        return Err(Error::LabelOutOfRange { row, label, classes });
    }
    Ok(())
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(act: Activation) -> NetworkSpec {
        NetworkSpec::new(vec![2, 3, 4], vec![act], vec![0]).unwrap()
    }

    #[test]
    fn zero_sigmoid_network() {
        let net = Network::zeros(spec(Activation::Sigmoid)).unwrap();
        let batch = Matrix::from_rows(&[[1.0, -2.0], [3.0, 0.5]]).unwrap();
        let pass = net.forward(&batch).unwrap();
        assert!(pass.hidden[0].as_slice().iter().all(|&a| a == 0.5));
        assert!(pass.probs.as_slice().iter().all(|&p| p == 0.25));
    }

    #[test]
    fn relu_negative_preactivations_vanish() {
        let mut net = Network::zeros(spec(Activation::Relu)).unwrap();
        net.layers[0].bias = vec![-1.0; 3];
        let batch = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        let pass = net.forward(&batch).unwrap();
        assert!(pass.hidden[0].as_slice().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn probabilities_are_distributions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Network::init(spec(Activation::Sigmoid), &mut rng).unwrap();
        let batch = Matrix::from_rows(&[[10.0, -3.0], [0.0, 0.0], [-50.0, 40.0]]).unwrap();
        let pass = net.forward(&batch).unwrap();
        for i in 0..3 {
            let row = pass.probs.row(i);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&p| p > 0.0 && p < 1.0));
        }
    }

    #[test]
    fn width_mismatch_and_bad_specs() {
        let net = Network::zeros(spec(Activation::Sigmoid)).unwrap();
        assert!(matches!(
            net.forward(&Matrix::zeros(1, 3)),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(NetworkSpec::new(vec![2, 3], vec![], vec![0]).is_err());
        assert!(NetworkSpec::new(vec![2, 3, 2], vec![Activation::Relu], vec![]).is_err());
        assert!(NetworkSpec::new(vec![2, 3, 2], vec![Activation::Relu], vec![1]).is_err());
        assert!(NetworkSpec::new(vec![2, 3, 3, 2], vec![Activation::Relu; 2], vec![0, 0]).is_err());
        assert!(NetworkSpec::new(vec![2, 3, 2], vec![Activation::Relu; 2], vec![0]).is_err());
    }

    #[test]
    fn init_respects_glorot_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = NetworkSpec::new(vec![4, 8, 2], vec![Activation::Relu], vec![0]).unwrap();
        let net = Network::init(s, &mut rng).unwrap();
        let limit = libm::sqrt(6.0 / 12.0);
        assert!(net.layers[0].weights.max_abs() <= limit);
        assert!(net.layers[0].weights.max_abs() > 0.0);
        assert!(net.layers.iter().all(|l| l.bias.iter().all(|b| *b == 0.0)));
    }

    #[test]
    fn tie_break_is_lowest_index() {
        assert_eq!(argmax(&[0.25, 0.25, 0.25, 0.25]), 0);
        assert_eq!(argmax(&[0.1, 0.6, 0.3]), 1);
    }
}
