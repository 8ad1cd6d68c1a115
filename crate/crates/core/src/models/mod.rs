//! Classifiers built on [`crate::nn`]: the axis-independent LSTM and its
//! spatially augmented variant, the two-stream hand CNN, max-score fusion,
//! and a softmax baseline over handcrafted statistics.

mod ai_lstm;
mod baseline;
mod cnn;
pub mod features;
mod fusion;
mod spec;
mod train;
mod trained;

pub use ai_lstm::{ai_lstm_forward, spatial_ai_lstm_forward, AiLstmModel, SpatialAiLstmModel};
pub use baseline::{baseline_predict, BaselineModel};
pub use cnn::{cnn_forward, CnnConfig, HandCnnModel, HandPair, HandStream};
pub use features::{extract_features126, series_stats, FeatureRow, NUM_FEATURES};
pub use fusion::{argmax, fuse_max, FusionModel};
pub use spec::{ModelKind, ModelSpec};
pub use train::{accuracy, fit, EpochHook, EpochStats, History, Hyperparams};
pub use trained::{feature_input, hand_input, lstm_input, run_to_completion, MaxFused, Net, Predictor, TrainedModel};
