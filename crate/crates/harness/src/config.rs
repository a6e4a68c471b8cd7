//! Run configuration: a TOML file layered over a preset, then command-line overrides.
//!
//! ```toml
//! game = "hanabi"          # or "matrix"
//! seed = 0
//!
//! [runner]
//! actor_threads = 4        # N
//! envs_per_thread = 16     # K
//! base_epsilon = 0.1
//! alpha = 7.0
//! eval_games = 1000
//! eval_every_updates = 500
//! checkpoint_every = 1000  # updates, 0 disables
//! duration_secs = 1800     # 0: no wall-clock limit
//! max_updates = 0          # 0: unlimited
//! insert_ratio = 1.0       # episodes inserted per episode sampled, 0 disables throttling
//! log_every = 10
//! deterministic = false    # single thread, bit-reproducible
//! out_dir = "runs/desk"
//!
//! [env]
//! players = 2
//! max_steps = 80
//!
//! [train]
//! mode = "vdn"             # or "iql"
//! sad = true
//! aux = false
//! hidden = 512
//! lstm_layers = 2
//! lr = 6.25e-5
//! ...
//!
//! [replay]
//! capacity = 65536
//! warmup = 10000
//! ...
//!
//! [matrix]
//! seeds = 100
//! episodes = 100000
//! ```

use std::path::{Path, PathBuf};

use sad_core::tabular::{EpsilonSchedule, TabularConfig};
use sad_hanabi::GameConfig;
use sad_nn::AdamConfig;
use sad_replay::ReplayConfig;
use sad_train::{Mode, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Game {
    Hanabi,
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunnerSection {
    pub actor_threads: usize,
    pub envs_per_thread: usize,
    pub base_epsilon: f64,
    pub alpha: f64,
    pub eval_games: usize,
    pub eval_every_updates: u64,
    pub checkpoint_every: u64,
    pub duration_secs: f64,
    pub max_updates: u64,
    pub insert_ratio: f64,
    pub log_every: u64,
    pub deterministic: bool,
    /// Stop as soon as an evaluation reaches this mean score.
    pub target_score: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub players: usize,
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub mode: String,
    pub sad: bool,
    pub broadcast_all_greedy: bool,
    pub aux: bool,
    pub gamma: f64,
    pub n_step: usize,
    pub target_sync_every: u64,
    pub actor_sync_every: u64,
    pub aux_weight: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub adam_eps: f64,
    pub grad_clip: Option<f64>,
    pub hidden: usize,
    pub lstm_layers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplaySection {
    pub capacity: usize,
    pub warmup: usize,
    pub priority_exponent: f64,
    pub is_exponent: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSection {
    pub seeds: usize,
    pub episodes: usize,
    pub learning_rate: f64,
    pub epsilon: f64,
    pub decay_fraction: f64,
    pub sad: bool,
    pub eval_every: usize,
    pub payoff: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunnerConfig {
    pub game: Game,
    pub seed: u64,
    pub runner: RunnerSection,
    pub env: EnvSection,
    pub train: TrainSection,
    pub replay: ReplaySection,
    pub matrix: MatrixSection,
}

/// Command-line overrides applied after the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub sad: Option<bool>,
    pub aux: Option<bool>,
    pub players: Option<usize>,
    pub seed: Option<u64>,
    pub duration_secs: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl RunnerConfig {
    /// Full-scale settings: 80 actor threads of 80 games, 512-unit network.
    pub fn full_scale(players: usize) -> Self {
        let mode = Mode::Vdn;
        Self {
            game: Game::Hanabi,
            seed: 0,
            runner: RunnerSection {
                actor_threads: 80,
                envs_per_thread: 80,
                base_epsilon: 0.1,
                alpha: 7.0,
                eval_games: 1000,
                eval_every_updates: 2500,
                checkpoint_every: 2500,
                duration_secs: 72.0 * 3600.0,
                max_updates: 0,
                insert_ratio: 0.0,
                log_every: 100,
                deterministic: false,
                target_score: None,
                out_dir: None,
            },
            env: EnvSection { players, max_steps: 80 },
            train: TrainSection::from_config(&TrainConfig {
                mode,
                batch_size: TrainConfig::full_scale_batch_size(mode, players),
                ..TrainConfig::default()
            }),
            replay: ReplaySection {
                capacity: if players <= 3 { 1 << 16 } else { 1 << 15 },
                ..ReplaySection::from_config(&ReplayConfig::default())
            },
            matrix: MatrixSection::default(),
        }
    }

    /// Settings sized for a desktop: 4 actor threads of 16 games, a smaller
    /// network, a replay that fits in memory and a short warm-up.
    pub fn desk(players: usize) -> Self {
        let mut cfg = Self::full_scale(players);
        cfg.runner = RunnerSection {
            actor_threads: 4,
            envs_per_thread: 16,
            eval_every_updates: 250,
            checkpoint_every: 1000,
            duration_secs: 1800.0,
            insert_ratio: 1.0,
            log_every: 10,
            ..cfg.runner
        };
        cfg.train.hidden = 64;
        cfg.train.lstm_layers = 2;
        cfg.train.batch_size = 32;
        cfg.train.lr = 1e-3;
        cfg.train.target_sync_every = 250;
        cfg.train.grad_clip = Some(5.0);
        cfg.replay.capacity = 1024;
        cfg.replay.warmup = 128;
        cfg
    }

    /// Parse a TOML file over `base`; keys absent from the file keep the base value.
    pub fn from_toml_over(text: &str, base: &RunnerConfig) -> Result<Self, HarnessError> {
        let mut merged = toml::Value::try_from(base).map_err(|e| HarnessError::Config(e.to_string()))?;
        let file: toml::Value = toml::from_str(text)?;
        merge(&mut merged, file);
        let cfg: RunnerConfig = merged.try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load a config file. A `desk_scale = true` entry at the top (or `desk`)
    /// selects the desk preset as the base.
    pub fn load(path: &Path, desk: bool) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let players = peek_players(&text).unwrap_or(2);
        let base = if desk { Self::desk(players) } else { Self::full_scale(players) };
        Self::from_toml_over(&text, &base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), HarnessError> {
        if let Some(players) = o.players {
            let sized = self.train.batch_size == TrainConfig::full_scale_batch_size(self.mode()?, self.env.players);
            self.env.players = players;
            if sized {
                self.train.batch_size = TrainConfig::full_scale_batch_size(self.mode()?, players);
            }
        }
        if let Some(m) = o.mode {
            self.train.mode = m.to_string();
        }
        if let Some(s) = o.sad {
            self.train.sad = s;
            self.matrix.sad = s;
        }
        if let Some(a) = o.aux {
            self.train.aux = a;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = o.duration_secs {
            self.runner.duration_secs = d;
        }
        if let Some(dir) = &o.out_dir {
            self.runner.out_dir = Some(dir.clone());
        }
        self.validate()
    }

    pub fn mode(&self) -> Result<Mode, HarnessError> {
        self.train.mode.parse().map_err(|e: sad_train::TrainError| HarnessError::Config(e.to_string()))
    }

    pub fn game_config(&self) -> Result<GameConfig, HarnessError> {
        let mut g = GameConfig::new(self.env.players).map_err(|e| HarnessError::Config(e.to_string()))?;
        g.max_steps = self.env.max_steps;
        Ok(g)
    }

    pub fn train_config(&self) -> Result<TrainConfig, HarnessError> {
        let t = &self.train;
        let cfg = TrainConfig {
            mode: self.mode()?,
            sad: t.sad,
            broadcast_all_greedy: t.broadcast_all_greedy,
            aux: t.aux,
            gamma: t.gamma,
            n_step: t.n_step,
            target_sync_every: t.target_sync_every,
            actor_sync_every: t.actor_sync_every,
            aux_weight: t.aux_weight,
            batch_size: t.batch_size,
            adam: AdamConfig {
                lr: t.lr,
                eps: t.adam_eps,
                ..AdamConfig::default()
            },
            grad_clip: t.grad_clip,
            hidden: t.hidden,
            lstm_layers: t.lstm_layers,
        };
        cfg.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn replay_config(&self) -> ReplayConfig {
        let r = &self.replay;
        ReplayConfig {
            capacity: r.capacity,
            warmup: r.warmup,
            priority_exponent: r.priority_exponent,
            is_exponent: r.is_exponent,
            eta: r.eta,
        }
    }

    pub fn tabular_config(&self) -> Result<TabularConfig, HarnessError> {
        let m = &self.matrix;
        let payoff = match &m.payoff {
            Some(p) => sad_core::matrix_game::load_payoff(p).map_err(|e| HarnessError::Config(e.to_string()))?,
            None => sad_core::matrix_game::default_payoff(),
        };
        let cfg = TabularConfig {
            learning_rate: m.learning_rate,
            epsilon: EpsilonSchedule {
                start: m.epsilon,
                decay_fraction: m.decay_fraction,
            },
            episodes: m.episodes,
            seeds: m.seeds,
            sad_enabled: m.sad,
            base_seed: self.seed,
            eval_every: m.eval_every,
            payoff,
        };
        cfg.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        let r = &self.runner;
        if r.actor_threads == 0 || r.envs_per_thread == 0 {
            return bad("actor_threads and envs_per_thread must be at least 1".into());
        }
        if !(r.base_epsilon >= 0.0 && r.base_epsilon <= 1.0) || !(r.alpha >= 0.0) {
            return bad("base_epsilon must lie in [0, 1] and alpha be non-negative".into());
        }
        if r.eval_games == 0 {
            return bad("eval_games must be positive".into());
        }
        if !(r.duration_secs >= 0.0) || !(r.insert_ratio >= 0.0) {
            return bad("duration_secs and insert_ratio must be non-negative".into());
        }
        if r.log_every == 0 {
            return bad("log_every must be positive".into());
        }
        if self.game == Game::Matrix {
            self.tabular_config()?;
            return Ok(());
        }
        self.game_config()?;
        self.train_config()?;
        self.replay_config().validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.replay.warmup < self.train.batch_size.min(self.replay.capacity) {
            return bad(format!(
                "replay warm-up {} is smaller than the batch size {}",
                self.replay.warmup, self.train.batch_size
            ));
        }
        Ok(())
    }
}

impl Default for MatrixSection {
    fn default() -> Self {
        let t = TabularConfig::default();
        Self {
            seeds: t.seeds,
            episodes: t.episodes,
            learning_rate: t.learning_rate,
            epsilon: t.epsilon.start,
            decay_fraction: t.epsilon.decay_fraction,
            sad: t.sad_enabled,
            eval_every: t.eval_every,
            payoff: None,
        }
    }
}

impl TrainSection {
    fn from_config(t: &TrainConfig) -> Self {
        Self {
            mode: t.mode.to_string(),
            sad: t.sad,
            broadcast_all_greedy: t.broadcast_all_greedy,
            aux: t.aux,
            gamma: t.gamma,
            n_step: t.n_step,
            target_sync_every: t.target_sync_every,
            actor_sync_every: t.actor_sync_every,
            aux_weight: t.aux_weight,
            batch_size: t.batch_size,
            lr: t.adam.lr,
            adam_eps: t.adam.eps,
            grad_clip: t.grad_clip,
            hidden: t.hidden,
            lstm_layers: t.lstm_layers,
        }
    }
}

impl ReplaySection {
    fn from_config(r: &ReplayConfig) -> Self {
        Self {
            capacity: r.capacity,
            warmup: r.warmup,
            priority_exponent: r.priority_exponent,
            is_exponent: r.is_exponent,
            eta: r.eta,
        }
    }
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn peek_players(text: &str) -> Option<usize> {
    let v: toml::Value = toml::from_str(text).ok()?;
    v.get("env")?.get("players")?.as_integer().map(|p| p as usize)
}

/// Per-actor exploration rates `base^(1 + alpha * i / (n - 1))`; a single actor
/// gets `base`.
pub fn actor_epsilons(n: usize, base: f64, alpha: f64) -> Vec<f64> {
    if n <= 1 {
        return vec![base; n];
    }
    (0..n)
        .map(|i| base.powf(1.0 + alpha * i as f64 / (n - 1) as f64))
        .collect()
}
