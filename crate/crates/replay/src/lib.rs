//! Prioritized replay with whole episodes as the unit of storage and sampling.

pub mod buffer;
pub mod episode;
pub mod sum_tree;

pub use buffer::{episode_priority, PrioritizedReplay, ReplayMetrics, Sample};
pub use episode::{EpisodeRecord, NO_AUX_LABEL};
pub use sum_tree::SumTree;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ReplayError {
    #[error("replay holds {size} episodes, sampling needs {warmup}")]
    NotWarm { size: usize, warmup: usize },
    #[error("every stored episode has zero priority")]
    ZeroPriority,
    #[error("priority {0} is not a finite non-negative number")]
    InvalidPriority(f64),
    #[error("invalid replay config: {0}")]
    Config(String),
    #[error("invalid episode: {0}")]
    InvalidEpisode(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayConfig {
    pub capacity: usize,
    /// Episodes required before sampling is allowed.
    pub warmup: usize,
    /// Sampling probability is proportional to priority raised to this power.
    pub priority_exponent: f64,
    /// Importance weights are `(size · P)^-is_exponent`.
    pub is_exponent: f64,
    /// Weight of the max term in the episode priority.
    pub eta: f64,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self {
            capacity: 1 << 17,
            warmup: 10_000,
            priority_exponent: 0.9,
            is_exponent: 0.6,
            eta: 0.9,
        }
    }
}

impl ReplayConfig {
    pub fn validate(&self) -> Result<(), ReplayError> {
        let bad = |m: &str| Err(ReplayError::Config(m.into()));
        if self.capacity == 0 {
            return bad("capacity must be positive");
        }
        if self.warmup > self.capacity {
            return bad("warm-up exceeds capacity");
        }
        if !(self.priority_exponent >= 0.0 && self.is_exponent >= 0.0) {
            return bad("exponents must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return bad("eta must lie in [0, 1]");
        }
        Ok(())
    }
}
