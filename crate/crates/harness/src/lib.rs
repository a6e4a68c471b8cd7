//! Actor/trainer runner for Hanabi self-play and the matrix-game experiment.
//!
//! * [`config`]: TOML run configuration, presets and per-actor exploration rates.
//! * [`snapshot`]: immutable parameter snapshots shared between threads.
//! * [`runner`]: the threaded run loop and its single-threaded deterministic twin.
//! * [`checkpoint`]: greedy evaluation of a saved network.
//! * [`curves`]: mean and s.e.m. learning curves across run logs.
//! * [`throughput`]: env-step rate of batched actors.

pub mod checkpoint;
pub mod config;
pub mod curves;
pub mod runner;
pub mod snapshot;
pub mod throughput;

pub use checkpoint::{evaluate_checkpoint, save_checkpoint, CheckpointEval};
pub use config::{actor_epsilons, Game, Overrides, RunnerConfig};
pub use curves::{emit_curves, CurvePoint};
pub use runner::{run, run_matrix, EvalPoint, LogRow, RunMetrics, RunReport, StopReason};
pub use snapshot::{Snapshot, SnapshotCell};
pub use throughput::{measure_throughput, Throughput};

use sad_nn::NnError;
use sad_replay::ReplayError;
use sad_train::TrainError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("run failed: {0}")]
    Runtime(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Tabular(#[from] sad_core::tabular::TabularError),
}

impl HarnessError {
    /// Whether the failure lies in the user's input rather than during the run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            HarnessError::Config(_)
                | HarnessError::Toml(_)
                | HarnessError::Train(TrainError::Config(_))
                | HarnessError::Replay(ReplayError::Config(_))
                | HarnessError::Tabular(sad_core::tabular::TabularError::Config(_))
        )
    }
}
