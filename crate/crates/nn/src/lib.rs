//! A small neural kernel for recurrent Q-learning: dense and LSTM layers with a
//! dueling head, reverse-mode gradients written out by hand, Adam and checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod loss;
pub mod net;
pub mod scalar;
pub mod tensor;

pub use adam::{clip_grad_norm, Adam, AdamConfig};
pub use checkpoint::Checkpoint;
pub use net::{ForwardOutput, NetConfig, NetParams, RecurrentState};
pub use scalar::Scalar;
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("backward called without a recorded forward pass")]
    NoTape,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint built for encoder `{found}`, expected `{expected}`")]
    VersionMismatch { found: String, expected: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
