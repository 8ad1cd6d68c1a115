use std::ops::ControlFlow;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ai_lstm::AiLstmModel;
use super::baseline::BaselineModel;
use super::cnn::{CnnConfig, HandCnnModel, HandPair};
use super::features::{extract_features126, NUM_FEATURES};
use super::fusion::{fuse_max, FusionModel};
use super::spec::{ModelKind, ModelSpec};
use super::train::{fit, EpochHook, EpochStats, History, Hyperparams};
use crate::data::{Dataset, SignSample, DESIGNATED_JOINTS};
use crate::error::{Error, Result};
use crate::nn::checkpoint::Checkpoint;
use crate::nn::Network;
use crate::preprocess::{select_joints, skeletal_input, spatial_augment, SkelTensor, AUG_JOINTS};
use crate::rng::substream;

/// The learned parameters of any supported architecture.
#[derive(Clone, Debug, PartialEq)]
pub enum Net {
    AiLstm(AiLstmModel<f64>),
    Cnn(HandCnnModel<f64>),
    Fusion(FusionModel<f64>),
    Baseline(BaselineModel<f64>),
}

/// A trained classifier with everything needed to apply it to raw samples.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub vocabulary: Vec<String>,
    pub hyperparams: Hyperparams,
    pub history: Vec<History>,
    pub net: Net,
}

/// Anything that scores a raw sample over a fixed vocabulary.
pub trait Predictor: Sync {
    fn vocabulary(&self) -> &[String];
    /// Class scores for `s`; argmax with lowest-index ties is the prediction.
    fn scores(&self, s: &SignSample) -> Result<Vec<f64>>;
}

/// Skeletal input for an LSTM with `joints` input width (6 plain, 16 augmented).
pub fn lstm_input(s: &SignSample, frames: usize, joints: usize) -> Result<SkelTensor<f64>> {
    let x = skeletal_input(s, frames)?;
    match joints {
        6 => Ok(x),
        AUG_JOINTS => Ok(spatial_augment(&x, frames)?.into_skel()),
        j => Err(Error::Shape(format!("no skeletal input with {j} joints"))),
    }
}

pub fn hand_input(s: &SignSample) -> Result<HandPair<f64>> {
    match &s.hand_volumes {
        Some((l, r)) => Ok(HandPair::from_volumes(l, r)),
        None => Err(Error::MissingModality(format!(
            "sample {}/{}/{} has no hand volumes",
            s.subject_id, s.class_label, s.sample_id
        ))),
    }
}

/// The 126 statistics over the designated joints at native frame rate.
pub fn feature_input(s: &SignSample) -> Result<Vec<f64>> {
    extract_features126(&select_joints::<f64>(s, &DESIGNATED_JOINTS)?)
}

fn prepare<I>(d: &Dataset, f: impl Fn(&SignSample) -> Result<I>) -> Result<Vec<(I, usize)>> {
    d.samples.iter().map(|s| Ok((f(s)?, s.class_label))).collect()
}

#[derive(Serialize, Deserialize)]
struct Meta {
    spec: ModelSpec,
    vocabulary: Vec<String>,
    hyperparams: Hyperparams,
    history: Vec<History>,
    lstm_joints: Option<usize>,
    cnn: Option<CnnConfig>,
}

impl TrainedModel {
    /// Trains a fresh model of `spec` on `train`. Each fusion branch is
    /// trained on its own loss with the same hyperparameters.
    pub fn train(spec: &ModelSpec, train: &Dataset, hp: &Hyperparams, hook: EpochHook) -> Result<Self> {
        spec.validate()?;
        hp.validate()?;
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let classes = train.num_classes();
        let mut history = Vec::new();
        let net = match spec.kind {
            ModelKind::AiLstm | ModelKind::SpatialAiLstm => {
                let j = if spec.kind == ModelKind::AiLstm { 6 } else { AUG_JOINTS };
                let (m, h) = train_lstm(spec, train, hp, j, spec.kind.name(), hook)?;
                history.push(h);
                Net::AiLstm(m)
            }
            ModelKind::Cnn3d => {
                let (m, h) = train_cnn(spec, train, hp, spec.kind.name(), hook)?;
                history.push(h);
                Net::Cnn(m)
            }
            ModelKind::MaxFusion => {
                let (cnn, hc) = train_cnn(spec, train, hp, "cnn3d", hook)?;
                let (lstm, hl) = train_lstm(spec, train, hp, 6, "ai-lstm", hook)?;
                history.extend([hl, hc]);
                Net::Fusion(FusionModel::new(lstm, cnn)?)
            }
            ModelKind::Baseline => {
                let data = prepare(train, feature_input)?;
                let feats: Vec<Vec<f64>> = data.iter().map(|(x, _)| x.clone()).collect();
                let mut m = BaselineModel::new(&feats, classes, &mut substream(hp.seed, "init.baseline"))?;
                history.push(fit(&mut m, &data, hp, "baseline", hook)?);
                Net::Baseline(m)
            }
        };
        Ok(TrainedModel {
            spec: spec.clone(),
            vocabulary: train.vocabulary.clone(),
            hyperparams: hp.clone(),
            history,
            net,
        })
    }

    /// Combines an LSTM-family model and a CNN trained on the same vocabulary.
    pub fn fuse(lstm: &TrainedModel, cnn: &TrainedModel) -> Result<Self> {
        if lstm.vocabulary != cnn.vocabulary {
            return Err(Error::VocabularyMismatch("fusion branches were trained on different vocabularies".into()));
        }
        let (Net::AiLstm(l), Net::Cnn(c)) = (&lstm.net, &cnn.net) else {
            return Err(Error::InvalidInput("fusion needs an LSTM-family model and a cnn3d model".into()));
        };
        let mut spec = lstm.spec.clone();
        spec.kind = ModelKind::MaxFusion;
        spec.cnn_channels = cnn.spec.cnn_channels;
        spec.cnn_fc = cnn.spec.cnn_fc;
        Ok(TrainedModel {
            spec,
            vocabulary: lstm.vocabulary.clone(),
            hyperparams: lstm.hyperparams.clone(),
            history: lstm.history.iter().chain(&cnn.history).cloned().collect(),
            net: Net::Fusion(FusionModel::new(l.clone(), c.clone())?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind
    }

    /// Final epoch statistics of every trained branch.
    pub fn final_stats(&self) -> Vec<&EpochStats> {
        self.history.iter().filter_map(|h| h.epochs.last()).collect()
    }

    pub fn predict_sample(&self, s: &SignSample) -> Result<Vec<f64>> {
        let frames = self.spec.frames;
        match &self.net {
            Net::AiLstm(m) => m.predict(&lstm_input(s, frames, m.joints())?),
            Net::Cnn(m) => m.predict(&hand_input(s)?),
            Net::Fusion(m) => Ok(m.predict(&lstm_input(s, frames, m.lstm.joints())?, &hand_input(s)?)?.0),
            Net::Baseline(m) => m.predict(&feature_input(s)?),
        }
    }

    /// The head input of the skeletal branch (`3·S` values).
    pub fn embed_sample(&self, s: &SignSample) -> Result<Vec<f64>> {
        let m = match &self.net {
            Net::AiLstm(m) => m,
            Net::Fusion(f) => &f.lstm,
            _ => return Err(Error::InvalidInput(format!("{} has no skeletal embedding", self.kind()))),
        };
        m.embed(&lstm_input(s, self.spec.frames, m.joints())?)
    }

    pub fn parameter_count(&self) -> usize {
        match &self.net {
            Net::AiLstm(m) => crate::nn::param_count(m),
            Net::Cnn(m) => crate::nn::param_count(m),
            Net::Fusion(m) => crate::nn::param_count(m),
            Net::Baseline(m) => crate::nn::param_count(m),
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let (lstm_joints, cnn) = match &self.net {
            Net::AiLstm(m) => (Some(m.joints()), None),
            Net::Cnn(m) => (None, Some(m.config.clone())),
            Net::Fusion(m) => (Some(m.lstm.joints()), Some(m.cnn.config.clone())),
            Net::Baseline(_) => (None, None),
        };
        let meta = Meta {
            spec: self.spec.clone(),
            vocabulary: self.vocabulary.clone(),
            hyperparams: self.hyperparams.clone(),
            history: self.history.clone(),
            lstm_joints,
            cnn,
        };
        let meta = serde_json::to_value(meta).expect("metadata serializes");
        let arch = self.kind().name();
        match &self.net {
            Net::AiLstm(m) => Checkpoint::from_params(arch, meta, m),
            Net::Cnn(m) => Checkpoint::from_params(arch, meta, m),
            Net::Fusion(m) => Checkpoint::from_params(arch, meta, m),
            Net::Baseline(m) => Checkpoint::from_params(arch, meta, m),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let meta: Meta = serde_json::from_value(ck.meta.clone()).map_err(|e| Error::InvalidInput(format!("checkpoint metadata: {e}")))?;
        let kind: ModelKind = ck.arch.parse()?;
        if kind != meta.spec.kind {
            return Err(Error::InvalidInput(format!("checkpoint tag {} disagrees with metadata {}", ck.arch, meta.spec.kind)));
        }
        let classes = meta.vocabulary.len();
        let spec = &meta.spec;
        let mut rng = substream(0, "skeleton");
        let lstm = |j: Option<usize>, rng: &mut crate::rng::Rng| -> Result<AiLstmModel<f64>> {
            let j = j.ok_or_else(|| Error::InvalidInput("checkpoint lacks lstm input width".into()))?;
            Ok(AiLstmModel::new(j, spec.state_size, spec.lstm_layers, classes, rng))
        };
        let cnn = |c: &Option<CnnConfig>, rng: &mut crate::rng::Rng| -> Result<HandCnnModel<f64>> {
            let c = c.clone().ok_or_else(|| Error::InvalidInput("checkpoint lacks cnn configuration".into()))?;
            HandCnnModel::new(c, classes, rng)
        };
        let mut net = match kind {
            ModelKind::AiLstm | ModelKind::SpatialAiLstm => Net::AiLstm(lstm(meta.lstm_joints, &mut rng)?),
            ModelKind::Cnn3d => Net::Cnn(cnn(&meta.cnn, &mut rng)?),
            ModelKind::MaxFusion => Net::Fusion(FusionModel::new(lstm(meta.lstm_joints, &mut rng)?, cnn(&meta.cnn, &mut rng)?)?),
            ModelKind::Baseline => {
                let zero = vec![vec![0.0; NUM_FEATURES]];
                Net::Baseline(BaselineModel::new(&zero, classes, &mut rng)?)
            }
        };
        match &mut net {
            Net::AiLstm(m) => ck.load_into(m)?,
            Net::Cnn(m) => ck.load_into(m)?,
            Net::Fusion(m) => ck.load_into(m)?,
            Net::Baseline(m) => ck.load_into(m)?,
        }
        Ok(TrainedModel {
            spec: meta.spec,
            vocabulary: meta.vocabulary,
            hyperparams: meta.hyperparams,
            history: meta.history,
            net,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

impl Predictor for TrainedModel {
    fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    fn scores(&self, s: &SignSample) -> Result<Vec<f64>> {
        self.predict_sample(s)
    }
}

/// Two independently trained predictors fused by element-wise maximum.
pub struct MaxFused<'a> {
    a: &'a dyn Predictor,
    b: &'a dyn Predictor,
}

impl<'a> MaxFused<'a> {
    pub fn new(a: &'a dyn Predictor, b: &'a dyn Predictor) -> Result<Self> {
        if a.vocabulary() != b.vocabulary() {
            return Err(Error::VocabularyMismatch("fused models disagree on the class vocabulary".into()));
        }
        Ok(MaxFused { a, b })
    }
}

impl Predictor for MaxFused<'_> {
    fn vocabulary(&self) -> &[String] {
        self.a.vocabulary()
    }

    fn scores(&self, s: &SignSample) -> Result<Vec<f64>> {
        Ok(fuse_max(&self.a.scores(s)?, &self.b.scores(s)?)?.0)
    }
}

fn train_lstm(spec: &ModelSpec, d: &Dataset, hp: &Hyperparams, joints: usize, branch: &str, hook: EpochHook) -> Result<(AiLstmModel<f64>, History)> {
    let data = prepare(d, |s| lstm_input(s, spec.frames, joints))?;
    let mut m = AiLstmModel::new(joints, spec.state_size, spec.lstm_layers, d.num_classes(), &mut substream(hp.seed, &format!("init.{branch}")));
    let h = fit(&mut m, &data, hp, branch, hook)?;
    Ok((m, h))
}

fn train_cnn(spec: &ModelSpec, d: &Dataset, hp: &Hyperparams, branch: &str, hook: EpochHook) -> Result<(HandCnnModel<f64>, History)> {
    let data = prepare(d, hand_input)?;
    let dims = data[0].0.left.shape();
    let input = [dims[0], dims[1], dims[2], dims[3]];
    let cfg = CnnConfig::fit(input, spec.cnn_channels, spec.cnn_fc)?;
    let mut m = HandCnnModel::new(cfg, d.num_classes(), &mut substream(hp.seed, &format!("init.{branch}")))?;
    let h = fit(&mut m, &data, hp, branch, hook)?;
    Ok((m, h))
}

/// An [`EpochHook`] that never stops training.
pub fn run_to_completion(_: &str, _: &EpochStats) -> ControlFlow<()> {
    ControlFlow::Continue(())
}
