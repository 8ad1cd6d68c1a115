use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::fusion::argmax;
use super::spec::ModelKind;
use crate::error::{Error, Result};
use crate::nn::{adam_step, batch_loss_and_gradient, clip_global_norm, AdamConfig, AdamState, Dropout, Network};
use crate::rng::keyed;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub l2_beta: f64,
    pub dropout_keep: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Global gradient-norm ceiling; off by default.
    pub clip_norm: Option<f64>,
}

impl Hyperparams {
    pub const DEFAULT_EPOCHS: usize = 250;

    /// Defaults for `kind`: learning rate 5e-5 for the LSTM models, 1e-5 for
    /// the CNN and fusion models, 1e-2 for the feature baseline.
    pub fn for_kind(kind: ModelKind) -> Self {
        Hyperparams {
            learning_rate: kind.default_learning_rate(),
            ..Hyperparams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be a finite non-negative number", self.learning_rate));
        }
        if !(self.l2_beta >= 0.0) {
            return bad(format!("l2 beta {} must be non-negative", self.l2_beta));
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return bad(format!("dropout keep {} outside (0, 1]", self.dropout_keep));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        if self.clip_norm.is_some_and(|c| !(c > 0.0)) {
            return bad("clip norm must be positive".into());
        }
        Ok(())
    }
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            learning_rate: 5e-5,
            l2_beta: 0.008,
            dropout_keep: 0.5,
            epochs: Self::DEFAULT_EPOCHS,
            batch_size: 64,
            adam: AdamConfig::default(),
            seed: 0,
            clip_norm: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Sample-weighted mean of the batch training losses.
    pub loss: f64,
    /// Accuracy on the training set in inference mode, after the epoch.
    pub train_accuracy: f64,
    pub batches: usize,
}

/// Per-epoch record of one trained network.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub branch: String,
    pub epochs: Vec<EpochStats>,
}

/// Observer called after every epoch; `Break` stops training early.
pub type EpochHook<'a> = &'a mut dyn FnMut(&str, &EpochStats) -> ControlFlow<()>;

/// Mini-batch Adam on mean cross-entropy plus L2. Shuffling and dropout
/// draw from streams named after `branch`, so two branches trained with the
/// same seed stay independent.
pub fn fit<T: Real, M: Network<T>>(model: &mut M, data: &[(M::Input, usize)], hp: &Hyperparams, branch: &str, hook: EpochHook) -> Result<History> {
    hp.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut adam = AdamState::new(model);
    let lr = T::lit(hp.learning_rate);
    let beta = T::lit(hp.l2_beta);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = History {
        branch: branch.to_string(),
        epochs: Vec::new(),
    };
    for epoch in 0..hp.epochs {
        order.sort_unstable();
        order.shuffle(&mut keyed(hp.seed, &format!("shuffle.{branch}"), &[epoch as u64]));
        let mut drop_rng = keyed(hp.seed, &format!("dropout.{branch}"), &[epoch as u64]);
        let mut total = 0.0;
        let mut batches = 0;
        for (b, chunk) in order.chunks(hp.batch_size).enumerate() {
            let batch: Vec<(&M::Input, usize)> = chunk.iter().map(|&i| (&data[i].0, data[i].1)).collect();
            let mut dropout = Dropout::new(hp.dropout_keep, &mut drop_rng);
            let (loss, mut grad) = batch_loss_and_gradient(model, &batch, beta, &mut dropout)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            if let Some(c) = hp.clip_norm {
                clip_global_norm(&mut grad, T::lit(c));
            }
            adam_step(model, &grad, &mut adam, lr, &hp.adam)?;
            total += loss.as_f64() * chunk.len() as f64;
            batches += 1;
        }
        let stats = EpochStats {
            epoch,
            loss: total / data.len() as f64,
            train_accuracy: accuracy(model, data)?,
            batches,
        };
        log::debug!("{branch} epoch {epoch}: loss {:.5}, train acc {:.4}", stats.loss, stats.train_accuracy);
        let flow = hook(branch, &stats);
        history.epochs.push(stats);
        if flow.is_break() {
            break;
        }
    }
    Ok(history)
}

/// Fraction of `data` classified correctly in inference mode.
pub fn accuracy<T: Real, M: Network<T>>(model: &M, data: &[(M::Input, usize)]) -> Result<f64> {
    let mut hits = 0;
    for (x, y) in data {
        if argmax(&model.predict(x)?) == *y {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len().max(1) as f64)
}
