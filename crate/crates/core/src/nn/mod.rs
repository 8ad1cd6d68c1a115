//! Minimal differentiable kernel: LSTM, 3D convolution, pooling, dense
//! softmax, dropout, Adam and a finite-difference gradient checker.
//!
//! There is no general autodiff graph. Each forward pass returns a tape
//! holding exactly the activations its backward pass consumes, so a
//! backward call without its tape cannot be written.

mod adam;
pub mod checkpoint;
mod conv;
mod dense;
mod dropout;
mod gradcheck;
pub mod init;
mod lstm;
mod network;
pub(crate) mod params;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use conv::{conv3d_backward, conv3d_forward, maxpool3d, maxpool3d_backward, relu_backward_inplace, relu_inplace, Conv3dLayer, PoolTape};
pub use dense::{cross_entropy, dense_softmax_xent, softmax, Dense};
pub use dropout::{dropout_apply, Dropout};
pub use gradcheck::{check_gradient, finite_diff_gradcheck, GradCheckReport};
pub use lstm::{lstm_backward, lstm_cell_forward, lstm_forward, CellCache, LstmParams, LstmState, LstmTape};
pub use network::{batch_loss, batch_loss_and_gradient, Network};
pub use params::{add_scaled, join, clip_global_norm, l2_penalty, param_count, zeros_like, ParamSet, Role};
pub use tensor::Tensor;
