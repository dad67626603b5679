//! Minimal differentiable kernel set: dense matrices, the LSTM cell and its
//! bidirectional wrapper, dense layers, softmax cross-entropy, reverse-mode
//! gradients for all of it, Adam, and a finite-difference gradient checker.

mod adam;
mod dense;
mod fdpair;
mod gradcheck;
mod gradients;
mod lstm;
mod matrix;
mod softmax;

pub use adam::{adam_update_tensor, AdamConfig, AdamState};
pub use dense::{dense_backward, dense_forward, Activation, DenseCache, DenseParams};
pub use fdpair::FdPair;
pub use gradcheck::{grad_check, GradCheckResult};
pub use gradients::{Gradients, ParamAccess};
pub use lstm::{
    bilstm_backward, bilstm_forward, bilstm_summary, glorot_uniform, lstm_step, BiLstmCache,
    BiLstmParams, LstmCache, LstmParams,
};
pub use matrix::{concat, Matrix, Scalar};
pub use softmax::{softmax, softmax_xent};
