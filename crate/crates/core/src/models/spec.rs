use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cnn::CnnConfig;
use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    AiLstm,
    SpatialAiLstm,
    Cnn3d,
    MaxFusion,
    Baseline,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [ModelKind::AiLstm, ModelKind::SpatialAiLstm, ModelKind::Cnn3d, ModelKind::MaxFusion, ModelKind::Baseline];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::AiLstm => "ai-lstm",
            ModelKind::SpatialAiLstm => "spatial-ai-lstm",
            ModelKind::Cnn3d => "cnn3d",
            ModelKind::MaxFusion => "max-fusion",
            ModelKind::Baseline => "baseline",
        }
    }

    pub fn needs_hand_volumes(self) -> bool {
        matches!(self, ModelKind::Cnn3d | ModelKind::MaxFusion)
    }

    pub fn default_learning_rate(self) -> f64 {
        match self {
            ModelKind::AiLstm | ModelKind::SpatialAiLstm => 5e-5,
            ModelKind::Cnn3d | ModelKind::MaxFusion => 1e-5,
            ModelKind::Baseline => 1e-2,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown model {s:?}; expected one of ai-lstm, spatial-ai-lstm, cnn3d, max-fusion, baseline")))
    }
}

/// Architecture choice and sizes. Hand-volume dimensions are taken from the
/// training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub state_size: usize,
    pub lstm_layers: usize,
    /// Frames after temporal resampling.
    pub frames: usize,
    pub cnn_channels: [usize; 4],
    pub cnn_fc: [usize; 2],
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec {
            kind,
            state_size: 50,
            lstm_layers: 2,
            frames: crate::preprocess::DEFAULT_FRAMES,
            cnn_channels: CnnConfig::DEFAULT_CHANNELS,
            cnn_fc: CnnConfig::DEFAULT_FC,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.state_size == 0 || self.lstm_layers == 0 || self.frames == 0 {
            return Err(Error::InvalidConfig("state size, layer count and frame count must be positive".into()));
        }
        if self.cnn_channels.contains(&0) || self.cnn_fc.contains(&0) {
            return Err(Error::InvalidConfig("cnn layer widths must be positive".into()));
        }
        Ok(())
    }
}
