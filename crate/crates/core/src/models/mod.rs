//! The model zoo: frame-level networks over LLD matrices, utterance-level
//! networks over functional vectors, and a linear SVM baseline.

mod svm;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{
    softmax, AttentionPool, BatchNorm, Blstm, Conv1d, Dense, Dropout, GlobalMaxPool, LastStep,
    Layer, MaxPool1d, Mode, Network, NnError, NnRng, Relu, Reshape, Tensor,
};

pub use svm::{svm_train, SvmModel, SvmOptions};

/// Anger, happiness, neutral, sadness, surprise.
pub const NUM_CLASSES: usize = 5;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("incompatible input shape: {0}")]
    IncompatibleShape(String),
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Dense block widths, each followed by batch norm, ReLU and dropout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenseParams {
    pub layers: Vec<usize>,
    pub dropout: f64,
}

impl Default for DenseParams {
    fn default() -> Self {
        Self {
            layers: vec![512, 256, 128],
            dropout: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlstmParams {
    pub hidden: usize,
}

impl Default for BlstmParams {
    fn default() -> Self {
        Self { hidden: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttnBlstmParams {
    pub hidden: usize,
    pub attention_dim: usize,
}

impl Default for AttnBlstmParams {
    fn default() -> Self {
        Self {
            hidden: 128,
            attention_dim: 64,
        }
    }
}

/// `conv_blocks` repetitions of conv → ReLU → max-pool ahead of the attentive BLSTM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnAttnBlstmParams {
    pub channels: usize,
    pub kernel: usize,
    pub pool: usize,
    pub conv_blocks: usize,
    pub hidden: usize,
    pub attention_dim: usize,
}

impl Default for CnnAttnBlstmParams {
    fn default() -> Self {
        Self {
            channels: 64,
            kernel: 5,
            pool: 2,
            conv_blocks: 2,
            hidden: 128,
            attention_dim: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnFuncParams {
    pub channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub conv_blocks: usize,
}

impl Default for CnnFuncParams {
    fn default() -> Self {
        Self {
            channels: 32,
            kernel: 8,
            stride: 2,
            conv_blocks: 2,
        }
    }
}

/// Architecture selector with per-kind hyperparameters, tagged by `kind` in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    DnnFrames(DenseParams),
    Blstm(BlstmParams),
    AttnBlstm(AttnBlstmParams),
    CnnAttnBlstm(CnnAttnBlstmParams),
    DnnFunc(DenseParams),
    CnnFunc(CnnFuncParams),
    SvmFunc(SvmOptions),
}

impl ModelSpec {
    pub const KINDS: [&'static str; 7] = [
        "dnn_frames",
        "blstm",
        "attn_blstm",
        "cnn_attn_blstm",
        "dnn_func",
        "cnn_func",
        "svm_func",
    ];

    /// Spec with default hyperparameters for a kind name.
    pub fn default_for(kind: &str) -> Option<Self> {
        Some(match kind {
            "dnn_frames" => Self::DnnFrames(DenseParams::default()),
            "blstm" => Self::Blstm(BlstmParams::default()),
            "attn_blstm" => Self::AttnBlstm(AttnBlstmParams::default()),
            "cnn_attn_blstm" => Self::CnnAttnBlstm(CnnAttnBlstmParams::default()),
            "dnn_func" => Self::DnnFunc(DenseParams::default()),
            "cnn_func" => Self::CnnFunc(CnnFuncParams::default()),
            "svm_func" => Self::SvmFunc(SvmOptions::default()),
            _ => return None,
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::DnnFrames(_) => "dnn_frames",
            Self::Blstm(_) => "blstm",
            Self::AttnBlstm(_) => "attn_blstm",
            Self::CnnAttnBlstm(_) => "cnn_attn_blstm",
            Self::DnnFunc(_) => "dnn_func",
            Self::CnnFunc(_) => "cnn_func",
            Self::SvmFunc(_) => "svm_func",
        }
    }

    pub fn num_classes(&self) -> usize {
        NUM_CLASSES
    }

    /// Frame-level kinds consume `[frames, features]`; the rest a flat vector.
    pub fn is_frame_level(&self) -> bool {
        matches!(
            self,
            Self::DnnFrames(_) | Self::Blstm(_) | Self::AttnBlstm(_) | Self::CnnAttnBlstm(_)
        )
    }

    pub fn has_attention(&self) -> bool {
        matches!(self, Self::AttnBlstm(_) | Self::CnnAttnBlstm(_))
    }

    /// Override the dropout rate of kinds that have one.
    pub fn set_dropout(&mut self, rate: f64) {
        if let Self::DnnFrames(p) | Self::DnnFunc(p) = self {
            p.dropout = rate;
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: &str| Err(ModelError::InvalidSpec(format!("{}: {msg}", self.kind())));
        match self {
            Self::DnnFrames(p) | Self::DnnFunc(p) => {
                if p.layers.contains(&0) {
                    return bad("dense widths must be positive");
                }
                if !(0.0..1.0).contains(&p.dropout) {
                    return bad("dropout must lie in [0, 1)");
                }
            }
            Self::Blstm(p) if p.hidden == 0 => return bad("hidden size must be positive"),
            Self::AttnBlstm(p) if p.hidden == 0 || p.attention_dim == 0 => {
                return bad("hidden and attention sizes must be positive")
            }
            Self::CnnAttnBlstm(p) => {
                if [p.channels, p.kernel, p.pool, p.hidden, p.attention_dim].contains(&0) {
                    return bad("sizes must be positive");
                }
            }
            Self::CnnFunc(p) => {
                if [p.channels, p.kernel, p.stride].contains(&0) {
                    return bad("sizes must be positive");
                }
            }
            Self::SvmFunc(p) if p.c.is_nan() || p.c <= 0.0 || p.epochs == 0 => {
                return bad("C and epochs must be positive");
            }
            _ => {}
        }
        Ok(())
    }
}

/// Class decision with its distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_index: usize,
    pub probabilities: Vec<f64>,
    /// Per-frame attention for attentive kinds.
    pub attention_weights: Option<Vec<f64>>,
}

impl Prediction {
    pub fn from_probabilities(
        probabilities: Vec<f64>,
        attention_weights: Option<Vec<f64>>,
    ) -> Self {
        Self {
            class_index: argmax(&probabilities),
            probabilities,
            attention_weights,
        }
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// A built model: a layer stack or a linear SVM.
#[derive(Debug)]
pub enum Model {
    Network(Network),
    Svm(SvmModel),
}

impl Model {
    pub fn input_shape(&self) -> Vec<usize> {
        match self {
            Model::Network(n) => n.input_shape().to_vec(),
            Model::Svm(s) => vec![s.dim()],
        }
    }

    pub fn network(&self) -> Option<&Network> {
        match self {
            Model::Network(n) => Some(n),
            Model::Svm(_) => None,
        }
    }

    pub fn network_mut(&mut self) -> Option<&mut Network> {
        match self {
            Model::Network(n) => Some(n),
            Model::Svm(_) => None,
        }
    }

    /// Eval-mode class scores for a batch `[batch, ..input_shape]`.
    pub fn logits(&mut self, batch: &Tensor) -> Result<Tensor, ModelError> {
        self.check_batch(batch)?;
        match self {
            Model::Network(n) => {
                // eval mode draws no randomness
                let mut rng = NnRng::seed_from_u64(0);
                Ok(n.forward(batch, Mode::Eval, &mut rng)?)
            }
            Model::Svm(s) => s.decision_batch(batch),
        }
    }

    pub fn predict_batch(&mut self, batch: &Tensor) -> Result<Vec<Prediction>, ModelError> {
        let logits = self.logits(batch)?;
        let probs = softmax(&logits)?;
        let classes = logits.shape()[1];
        let attention = self.network().and_then(|n| n.attention_weights()).cloned();
        Ok(probs
            .data()
            .chunks_exact(classes)
            .enumerate()
            .map(|(b, p)| {
                let weights = attention.as_ref().map(|a| {
                    let time = a.shape()[1];
                    a.data()[b * time..(b + 1) * time].to_vec()
                });
                Prediction::from_probabilities(p.to_vec(), weights)
            })
            .collect())
    }

    /// Every learned tensor in a stable order, for checkpoints.
    pub fn state(&self) -> Vec<(String, Tensor)> {
        match self {
            Model::Network(n) => n.state(),
            Model::Svm(s) => s.state(),
        }
    }

    pub fn load_state(&mut self, state: &[(String, Tensor)]) -> Result<(), ModelError> {
        match self {
            Model::Network(n) => Ok(n.load_state(state)?),
            Model::Svm(s) => s.load_state(state),
        }
    }

    fn check_batch(&self, batch: &Tensor) -> Result<(), ModelError> {
        let expected = self.input_shape();
        if batch.shape().get(1..) != Some(expected.as_slice()) {
            return Err(ModelError::IncompatibleShape(format!(
                "input {:?} does not match [batch, {:?}]",
                batch.shape(),
                expected
            )));
        }
        Ok(())
    }
}

/// Single-utterance prediction in eval mode.
pub fn predict(model: &mut Model, input: &Tensor) -> Result<Prediction, ModelError> {
    let mut shape = vec![1];
    shape.extend_from_slice(input.shape());
    let batch = input.clone().reshape(shape)?;
    Ok(model.predict_batch(&batch)?.remove(0))
}

fn dense_stack(
    layers: &mut Vec<Box<dyn Layer>>,
    inputs: usize,
    p: &DenseParams,
    rng: &mut NnRng,
) -> usize {
    let mut width = inputs;
    for &w in &p.layers {
        layers.push(Box::new(Dense::new(width, w, rng)));
        layers.push(Box::new(BatchNorm::new(w)));
        layers.push(Box::new(Relu::new()));
        if p.dropout > 0.0 {
            layers.push(Box::new(Dropout::new(p.dropout)));
        }
        width = w;
    }
    width
}

/// Wire the layer stack for `spec` over a per-sample `input_shape`, seeding initialization.
pub fn build(spec: &ModelSpec, input_shape: &[usize], seed: u64) -> Result<Model, ModelError> {
    spec.validate()?;
    let incompatible = |want: &str| {
        ModelError::IncompatibleShape(format!(
            "{} expects {want}, got {input_shape:?}",
            spec.kind()
        ))
    };
    let (frames, features) = match (spec.is_frame_level(), input_shape) {
        (true, &[t, f]) if t > 0 && f > 0 => (t, f),
        (true, _) => return Err(incompatible("[frames, features]")),
        (false, &[d]) if d > 0 => (1, d),
        (false, _) => return Err(incompatible("[dimension]")),
    };
    let mut rng = NnRng::seed_from_u64(seed);
    let rng = &mut rng;
    let mut layers: Vec<Box<dyn Layer>> = Vec::new();
    let head_in = match spec {
        ModelSpec::SvmFunc(opts) => {
            return Ok(Model::Svm(SvmModel::untrained(
                features,
                NUM_CLASSES,
                opts.clone(),
            )))
        }
        ModelSpec::DnnFrames(p) => {
            layers.push(Box::new(Reshape::new(vec![frames * features])));
            dense_stack(&mut layers, frames * features, p, rng)
        }
        ModelSpec::DnnFunc(p) => dense_stack(&mut layers, features, p, rng),
        ModelSpec::Blstm(p) => {
            layers.push(Box::new(Blstm::new(features, p.hidden, rng)));
            layers.push(Box::new(LastStep::new()));
            2 * p.hidden
        }
        ModelSpec::AttnBlstm(p) => {
            layers.push(Box::new(Blstm::new(features, p.hidden, rng)));
            layers.push(Box::new(AttentionPool::new(
                2 * p.hidden,
                p.attention_dim,
                rng,
            )));
            2 * p.hidden
        }
        ModelSpec::CnnAttnBlstm(p) => {
            let mut ch = features;
            for _ in 0..p.conv_blocks {
                layers.push(Box::new(Conv1d::new(p.kernel, ch, p.channels, 1, rng)));
                layers.push(Box::new(Relu::new()));
                layers.push(Box::new(MaxPool1d::new(p.pool, p.pool)));
                ch = p.channels;
            }
            layers.push(Box::new(Blstm::new(ch, p.hidden, rng)));
            layers.push(Box::new(AttentionPool::new(
                2 * p.hidden,
                p.attention_dim,
                rng,
            )));
            2 * p.hidden
        }
        ModelSpec::CnnFunc(p) => {
            layers.push(Box::new(Reshape::new(vec![features, 1])));
            let mut ch = 1;
            for _ in 0..p.conv_blocks {
                layers.push(Box::new(Conv1d::new(
                    p.kernel, ch, p.channels, p.stride, rng,
                )));
                layers.push(Box::new(Relu::new()));
                ch = p.channels;
            }
            layers.push(Box::new(GlobalMaxPool::new()));
            ch
        }
    };
    layers.push(Box::new(Dense::new(head_in, NUM_CLASSES, rng)));
    let net = Network::new(input_shape.to_vec(), layers)
        .map_err(|e| ModelError::IncompatibleShape(format!("{}: {e}", spec.kind())))?;
    Ok(Model::Network(net))
}
