use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::{compute_metrics, Dataset, HarnessError, Standardizer};
use crate::models::{build, svm_train, Model, ModelSpec, Prediction, NUM_CLASSES};
use crate::nn::{
    load_checkpoint, save_checkpoint, softmax_cross_entropy, Mode, NnRng, Optimizer, OptimizerKind,
    Tensor,
};

/// Batch size used for every eval-mode pass.
pub const EVAL_BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Seeds initialization, shuffling and dropout.
    pub seed: u64,
    /// Epochs without a validation UA improvement before stopping; 0 disables early stopping.
    pub early_stop_patience: usize,
    /// Overrides the dropout rate of dense model kinds.
    pub dropout_rate: Option<f64>,
    /// z-score inputs with statistics of the training split.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 50,
            seed: 42,
            early_stop_patience: 10,
            dropout_rate: None,
            standardize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || self.batch_size == 0 {
            return Err(HarnessError::ConfigInvalid(
                "learning_rate and batch_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_wa: f64,
    pub train_ua: f64,
    pub val_ua: Option<f64>,
    pub val_wa: Option<f64>,
}

pub fn write_history_csv(
    path: impl AsRef<Path>,
    history: &[EpochRecord],
) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for r in history {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

/// Eval-mode predictions for every sample, in dataset order.
pub fn predict_dataset(model: &mut Model, data: &Dataset) -> Result<Vec<Prediction>, HarnessError> {
    let mut out = Vec::with_capacity(data.len());
    let indices: Vec<usize> = (0..data.len()).collect();
    for chunk in indices.chunks(EVAL_BATCH) {
        let (x, _) = data.batch(chunk)?;
        out.extend(model.predict_batch(&x)?);
    }
    Ok(out)
}

fn accuracy_pair(model: &mut Model, data: &Dataset) -> Result<(f64, f64), HarnessError> {
    let pred: Vec<usize> = predict_dataset(model, data)?
        .iter()
        .map(|p| p.class_index)
        .collect();
    let r = compute_metrics(&data.labels(), &pred)?;
    Ok((r.ua, r.wa))
}

/// Split a shuffled order into batches, folding a trailing singleton into the
/// previous batch so batch norm always sees at least two samples.
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size).collect();
    if out.len() > 1 && out.last().map(|b| b.len()) == Some(1) {
        out.pop();
        let start = order.len() - 1 - out.last().unwrap().len();
        *out.last_mut().unwrap() = &order[start..];
    }
    out
}

/// Best validation score, its epoch and the parameters at that point.
type Best = (f64, usize, Vec<(String, Tensor)>);

/// Epoch-by-epoch mini-batch trainer for network models on prepared (already
/// standardized) datasets. Tracks the best validation UA and its parameters.
pub struct Trainer<'a> {
    model: Model,
    optimizer: Optimizer,
    config: TrainConfig,
    rng: NnRng,
    train: &'a Dataset,
    val: &'a Dataset,
    history: Vec<EpochRecord>,
    best: Option<Best>,
    stale: usize,
}

impl<'a> Trainer<'a> {
    pub fn new(
        spec: &ModelSpec,
        train: &'a Dataset,
        val: &'a Dataset,
        config: &TrainConfig,
    ) -> Result<Self, HarnessError> {
        config.validate()?;
        if train.is_empty() {
            return Err(HarnessError::ConfigInvalid("empty training set".into()));
        }
        let mut spec = spec.clone();
        if let Some(rate) = config.dropout_rate {
            spec.set_dropout(rate);
        }
        let model = build(&spec, &train.input_shape, config.seed)?;
        if model.network().is_none() {
            return Err(HarnessError::ConfigInvalid(format!(
                "{} is not trained by epochs",
                spec.kind()
            )));
        }
        Ok(Self {
            model,
            optimizer: Optimizer::new(config.optimizer, config.learning_rate),
            config: config.clone(),
            rng: NnRng::seed_from_u64(config.seed.wrapping_add(0x9e37_79b9)),
            train,
            val,
            history: Vec::new(),
            best: None,
            stale: 0,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn model_mut(&mut self) -> &mut Model {
        &mut self.model
    }

    pub fn history(&self) -> &[EpochRecord] {
        &self.history
    }

    /// Epoch whose parameters are currently retained as best, 1-based.
    pub fn best_epoch(&self) -> Option<usize> {
        self.best.as_ref().map(|b| b.1)
    }

    pub fn run_epoch(&mut self) -> Result<&EpochRecord, HarnessError> {
        let mut order: Vec<usize> = (0..self.train.len()).collect();
        order.shuffle(&mut self.rng);
        let net = self.model.network_mut().expect("checked in new");
        let mut loss_sum = 0.0;
        for batch in batches(&order, self.config.batch_size) {
            let (x, y) = self.train.batch(batch)?;
            let logits = net.forward(&x, Mode::Train, &mut self.rng)?;
            let (loss, grad) = softmax_cross_entropy(&logits, &y)?;
            net.zero_grad();
            net.backward(&grad)?;
            self.optimizer.step(net.params_mut())?;
            loss_sum += loss * batch.len() as f64;
        }
        let (train_ua, train_wa) = accuracy_pair(&mut self.model, self.train)?;
        let val = if self.val.is_empty() {
            None
        } else {
            Some(accuracy_pair(&mut self.model, self.val)?)
        };
        let epoch = self.history.len() + 1;
        let score = val.map_or(train_ua, |v| v.0);
        if self.best.as_ref().is_none_or(|b| score > b.0) {
            self.best = Some((score, epoch, self.model.state()));
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        self.history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / self.train.len() as f64,
            train_wa,
            train_ua,
            val_ua: val.map(|v| v.0),
            val_wa: val.map(|v| v.1),
        });
        Ok(self.history.last().unwrap())
    }

    /// Patience exhausted or epoch budget spent.
    pub fn should_stop(&self) -> bool {
        self.history.len() >= self.config.max_epochs
            || (self.config.early_stop_patience > 0
                && self.stale >= self.config.early_stop_patience)
    }

    /// Restore the best-scoring parameters and hand back the model.
    pub fn finish(mut self) -> Result<(Model, Vec<EpochRecord>, Option<usize>), HarnessError> {
        let best_epoch = self.best_epoch();
        if let Some((_, _, state)) = self.best.take() {
            self.model.load_state(&state)?;
        }
        Ok((self.model, self.history, best_epoch))
    }
}

/// A model with its input normalization, ready for prediction or checkpointing.
#[derive(Debug)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub model: Model,
    pub standardizer: Option<Standardizer>,
}

impl TrainedModel {
    pub fn prepare(&self, data: &Dataset) -> Dataset {
        match &self.standardizer {
            Some(s) => s.apply_dataset(data),
            None => data.clone(),
        }
    }

    /// Predictions on raw (unstandardized) inputs.
    pub fn predict(&mut self, data: &Dataset) -> Result<Vec<Prediction>, HarnessError> {
        let prepared = self.prepare(data);
        predict_dataset(&mut self.model, &prepared)
    }

    pub fn state(&self) -> Vec<(String, Tensor)> {
        let mut out = self
            .standardizer
            .as_ref()
            .map(|s| s.state())
            .unwrap_or_default();
        out.extend(self.model.state());
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HarnessError> {
        Ok(save_checkpoint(path, &self.state())?)
    }

    /// Rebuild from `spec` and restore a checkpoint written by [`TrainedModel::save`].
    pub fn load(
        path: impl AsRef<Path>,
        spec: &ModelSpec,
        input_shape: &[usize],
    ) -> Result<Self, HarnessError> {
        let mut state = load_checkpoint(path)?;
        let standardizer = if state.first().map(|s| s.0.as_str()) == Some("input.mean") {
            let rest = state.split_off(2);
            let s = Standardizer::from_state(&state[0].1, &state[1].1);
            state = rest;
            Some(s)
        } else {
            None
        };
        let mut model = build(spec, input_shape, 0)?;
        model.load_state(&state)?;
        Ok(Self {
            spec: spec.clone(),
            model,
            standardizer,
        })
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub trained: TrainedModel,
    pub history: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

fn svm_history(
    model: &mut Model,
    train: &Dataset,
    val: &Dataset,
    epochs: usize,
) -> Result<EpochRecord, HarnessError> {
    let Model::Svm(svm) = &*model else {
        unreachable!()
    };
    let hinge: f64 = train
        .samples
        .iter()
        .map(|s| {
            let f = svm.decision_values(s.input.data());
            (0..NUM_CLASSES)
                .map(|k| {
                    let y = if k == s.label { 1.0 } else { -1.0 };
                    (1.0 - y * f[k]).max(0.0)
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        / train.len() as f64;
    let (train_ua, train_wa) = accuracy_pair(model, train)?;
    let val = if val.is_empty() {
        None
    } else {
        Some(accuracy_pair(model, val)?)
    };
    Ok(EpochRecord {
        epoch: epochs,
        train_loss: hinge,
        train_wa,
        train_ua,
        val_ua: val.map(|v| v.0),
        val_wa: val.map(|v| v.1),
    })
}

/// Fit input normalization on `train`, then train `spec` with early stopping on
/// validation UA and return the best-validation checkpoint.
pub fn train_model(
    spec: &ModelSpec,
    train: &Dataset,
    val: &Dataset,
    config: &TrainConfig,
) -> Result<TrainOutcome, HarnessError> {
    config.validate()?;
    if train.is_empty() {
        return Err(HarnessError::ConfigInvalid("empty training set".into()));
    }
    let standardizer = config.standardize.then(|| Standardizer::fit(train));
    let (train_p, val_p) = match &standardizer {
        Some(s) => (s.apply_dataset(train), s.apply_dataset(val)),
        None => (train.clone(), val.clone()),
    };

    if let ModelSpec::SvmFunc(opts) = spec {
        let mut model = build(spec, &train.input_shape, config.seed)?;
        if config.max_epochs == 0 {
            return Ok(TrainOutcome {
                trained: TrainedModel {
                    spec: spec.clone(),
                    model,
                    standardizer,
                },
                history: Vec::new(),
                best_epoch: None,
            });
        }
        let x: Vec<Vec<f64>> = train_p
            .samples
            .iter()
            .map(|s| s.input.data().to_vec())
            .collect();
        model = Model::Svm(svm_train(
            &x,
            &train_p.labels(),
            NUM_CLASSES,
            opts,
            config.seed,
        )?);
        let record = svm_history(&mut model, &train_p, &val_p, opts.epochs)?;
        return Ok(TrainOutcome {
            trained: TrainedModel {
                spec: spec.clone(),
                model,
                standardizer,
            },
            history: vec![record],
            best_epoch: Some(opts.epochs),
        });
    }

    let mut trainer = Trainer::new(spec, &train_p, &val_p, config)?;
    while !trainer.should_stop() {
        let r = trainer.run_epoch()?;
        log::info!(
            "epoch {:>3} loss {:.4} train WA {:.2} val UA {}",
            r.epoch,
            r.train_loss,
            r.train_wa,
            r.val_ua.map_or("-".into(), |v| format!("{v:.2}"))
        );
    }
    let (model, history, best_epoch) = trainer.finish()?;
    Ok(TrainOutcome {
        trained: TrainedModel {
            spec: spec.clone(),
            model,
            standardizer,
        },
        history,
        best_epoch,
    })
}
