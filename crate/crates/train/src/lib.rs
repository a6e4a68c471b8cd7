//! Recurrent Q-learning for Hanabi.
//!
//! * [`act`]: masked argmax and epsilon-greedy action selection.
//! * [`targets`]: n-step double-Q targets for joint (VDN) and independent learners.
//! * [`loss`]: importance-weighted TD loss and the auxiliary card-status loss.
//! * [`learner`]: online and target networks with Adam updates.
//! * [`rollout`]: batched actors that step many games through one network call.
//! * [`eval`]: greedy evaluation and the random-play baseline.

pub mod act;
pub mod batch;
pub mod config;
pub mod eval;
pub mod learner;
pub mod loss;
pub mod rollout;
pub mod targets;

pub use act::{act, masked_argmax};
pub use batch::Batch;
pub use config::{Mode, TrainConfig};
pub use eval::{evaluate, random_baseline, EvalOutcome};
pub use learner::Learner;
pub use loss::{batch_loss, LossOutput, LossReport};
pub use rollout::{ActorConfig, Finished, SeedSource, SlotSource, VecActor};
pub use targets::{episode_targets, episode_td_errors, QView, Scope, TdTarget};

use sad_core::EnvError;
use sad_hanabi::HanabiError;
use sad_nn::NnError;
use sad_replay::ReplayError;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("no legal action")]
    NoLegalAction,
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Hanabi(#[from] HanabiError),
}
