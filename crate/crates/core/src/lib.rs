//! Sign recognition from skeletal joint streams and hand-patch video.
//!
//! The crate covers the whole pipeline: dataset schema and synthetic data
//! ([`data`]), preprocessing to fixed-shape inputs ([`preprocess`]), a small
//! hand-written differentiable kernel ([`nn`]), the model zoo ([`models`])
//! and cross-subject evaluation ([`eval`]).
//!
//! Numeric code is generic over [`Real`] (`f32`/`f64`); the aliases below
//! fix the precision for the common cases.

pub mod data;
pub mod error;
pub mod eval;
pub mod models;
pub mod nn;
pub mod preprocess;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Tensor64 = nn::Tensor<f64>;
pub type Tensor32 = nn::Tensor<f32>;
pub type SkelTensor64 = preprocess::SkelTensor<f64>;
pub type SkelTensor32 = preprocess::SkelTensor<f32>;
pub type AiLstm64 = models::AiLstmModel<f64>;
pub type AiLstm32 = models::AiLstmModel<f32>;
pub type HandCnn64 = models::HandCnnModel<f64>;
pub type HandCnn32 = models::HandCnnModel<f32>;
pub type Fusion64 = models::FusionModel<f64>;
pub type Fusion32 = models::FusionModel<f32>;
