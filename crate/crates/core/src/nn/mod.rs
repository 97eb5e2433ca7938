//! Dense-tensor neural-network engine with hand-written backpropagation.
//!
//! Layers cache what their backward pass needs during `forward`; calling
//! `backward` accumulates parameter gradients and returns the input gradient.
//! Everything runs in f64 on one thread so that seeded runs are bit-reproducible.

mod activation;
mod attention;
mod batchnorm;
mod checkpoint;
mod conv;
mod dense;
mod init;
mod layer;
pub mod linalg;
mod loss;
mod lstm;
mod network;
mod optim;
mod tensor;

use thiserror::Error;

pub use activation::{Dropout, Relu, Reshape};
pub use attention::AttentionPool;
pub use batchnorm::{BatchNorm, BN_EPS, BN_MOMENTUM};
pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_VERSION,
};
pub use conv::{Conv1d, GlobalMaxPool, MaxPool1d};
pub use dense::Dense;
pub use init::{glorot_limit, uniform_fill};
pub use layer::{Layer, Mode, NnRng, Param};
pub use loss::{log_softmax, softmax, softmax_cross_entropy};
pub use lstm::{Blstm, LastStep, Lstm};
pub use network::Network;
pub use optim::{Optimizer, OptimizerKind, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use tensor::Tensor;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("{op}: shape mismatch: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("{op}: non-finite value produced")]
    NonFinite { op: &'static str },
    #[error("batch norm needs at least 2 samples in train mode, got {0}")]
    BatchTooSmall(usize),
    #[error("label {label} outside [0, {classes})")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("backward called before forward on {0}")]
    NoForwardCache(&'static str),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
