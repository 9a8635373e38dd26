//! Dense binary classifier with manual backpropagation.
//!
//! The network is a stack of fully connected layers: ReLU on every hidden
//! layer, a single sigmoid output unit, binary cross-entropy loss, Adam
//! updates. Everything is 64-bit and deterministic for a fixed seed.

mod adam;
mod checkpoint;
mod grad;
mod loss;
mod model;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use grad::{backward, Gradients, LayerGrad};
pub use loss::{bce_loss, PROB_CLAMP};
pub use model::{forward, init_model, predict, Architecture, Layer, ModelParams};
pub use train::{train_epochs, train_single_epoch};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("input has {got} columns, model expects {expected}")]
    InputWidthMismatch { expected: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    Empty,
    #[error("label at index {index} is {value}, expected 0 or 1")]
    InvalidLabel { index: usize, value: u8 },
    #[error("probability at index {index} is not finite")]
    NonFiniteProb { index: usize },
    #[error("threshold {0} is not a probability")]
    InvalidThreshold(f64),
    #[error("gradient contains a non-finite value in layer {layer}")]
    NonFiniteGradient { layer: usize },
    #[error("gradient/state shape does not match parameters in layer {layer}")]
    ShapeMismatch { layer: usize },
    #[error("epochs must be at least 1")]
    ZeroEpochs,
    #[error("batch size must be at least 1")]
    ZeroBatchSize,
    #[error("checkpoint i/o: {0}")]
    CheckpointIo(#[from] std::io::Error),
    #[error("checkpoint is not valid JSON: {0}")]
    CheckpointFormat(#[from] serde_json::Error),
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },
    #[error("checkpoint is inconsistent: {0}")]
    CheckpointCorrupt(String),
}
