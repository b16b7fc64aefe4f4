//! Feedforward classifier trained on labeled source data with a discrepancy
//! penalty on selected hidden layers.

mod network;
mod train;

pub use network::{Activation, ForwardPass, Gradients, Layer, Network, NetworkSpec, ObjectiveEval};
pub use train::{evaluate, train_uda, Optimizer, TrainConfig, TrainHistory, TrainedModel, MIN_TRIMMED_BATCH};
