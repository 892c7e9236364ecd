//! From-scratch multi-label LSTM classifier: forward pass, backpropagation
//! through time, Adam, batch normalization, loss functions, the training
//! loop, and codeword decoding.

pub mod adam;
pub mod batchnorm;
pub mod dense;
mod init;
pub mod io;
pub mod loss;
pub mod lstm;
pub mod model;
pub mod train;

pub use adam::{AdamConfig, AdamState};
pub use batchnorm::{BatchNorm, BN_EPS, BN_MOMENTUM};
pub use io::{load_model, save_model};
pub use loss::{compute_loss, loss_grad_logits, LossKind, Targets};
pub use model::{
    decode_codeword, feature_steps, model_forward, predicted_label_set, HeadKind, ModelDims,
    ModelGrads, ModelParams, LEAKY_SLOPE,
};
pub use train::{gradient_check, train, BatchSource, EpochStats, TrainConfig};
