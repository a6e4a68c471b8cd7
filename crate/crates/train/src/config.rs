use std::fmt;
use std::str::FromStr;

use sad_hanabi::{Encoder, GreedySlots};
use sad_nn::{AdamConfig, NetConfig};

use crate::TrainError;

/// How agents are combined in the learning target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Independent Q-learning: every player learns from its own episode copy and
    /// only its own turns carry a TD error.
    Iql,
    /// Value decomposition: the joint Q-value is the sum of the per-agent values.
    Vdn,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Iql => "iql",
            Mode::Vdn => "vdn",
        })
    }
}

impl FromStr for Mode {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "iql" => Ok(Mode::Iql),
            "vdn" => Ok(Mode::Vdn),
            other => Err(TrainError::Config(format!("unknown mode {other:?}, expected iql or vdn"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    /// Feed the acting agent's greedy action to everyone at the next step.
    pub sad: bool,
    /// Broadcast every agent's greedy action instead of only the actor's.
    pub broadcast_all_greedy: bool,
    pub aux: bool,
    pub gamma: f64,
    pub n_step: usize,
    pub target_sync_every: u64,
    pub actor_sync_every: u64,
    pub aux_weight: f64,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Global gradient-norm clip, off when `None`.
    pub grad_clip: Option<f64>,
    pub hidden: usize,
    pub lstm_layers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Vdn,
            sad: true,
            broadcast_all_greedy: false,
            aux: false,
            gamma: 0.999,
            n_step: 3,
            target_sync_every: 2500,
            actor_sync_every: 10,
            aux_weight: 1.0,
            batch_size: 64,
            adam: AdamConfig::default(),
            grad_clip: None,
            hidden: 512,
            lstm_layers: 2,
        }
    }
}

impl TrainConfig {
    /// Episodes per batch used at full scale: 128 independent episodes, or joint
    /// episodes scaled down with the number of players.
    pub fn full_scale_batch_size(mode: Mode, players: usize) -> usize {
        match (mode, players) {
            (Mode::Iql, _) => 128,
            (Mode::Vdn, 2) => 64,
            (Mode::Vdn, 3) => 43,
            (Mode::Vdn, 4) => 32,
            (Mode::Vdn, _) => 26,
        }
    }

    pub fn greedy_slots(&self) -> GreedySlots {
        match (self.sad, self.broadcast_all_greedy) {
            (false, _) => GreedySlots::Off,
            (true, false) => GreedySlots::Acting,
            (true, true) => GreedySlots::All,
        }
    }

    pub fn net_config(&self, encoder: &Encoder) -> NetConfig {
        let aux_slots = if self.aux { encoder.hand_size } else { 0 };
        NetConfig {
            input_dim: encoder.dim(),
            hidden: self.hidden,
            lstm_layers: self.lstm_layers,
            num_actions: encoder.num_actions(),
            aux_slots,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma {} outside (0, 1]", self.gamma));
        }
        if self.n_step == 0 {
            return bad("n_step must be at least 1".into());
        }
        if self.target_sync_every == 0 || self.actor_sync_every == 0 {
            return bad("sync intervals must be positive".into());
        }
        if self.batch_size == 0 || self.hidden == 0 {
            return bad("batch_size and hidden must be positive".into());
        }
        if !(self.aux_weight >= 0.0 && self.aux_weight.is_finite()) {
            return bad(format!("aux_weight {} must be finite and non-negative", self.aux_weight));
        }
        if !(self.adam.lr > 0.0 && self.adam.lr.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.adam.lr));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return bad(format!("grad_clip {c} must be positive"));
            }
        }
        if self.broadcast_all_greedy && !self.sad {
            return bad("broadcast_all_greedy requires sad".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = TrainConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.gamma, 0.999);
        assert_eq!(cfg.target_sync_every, 2500);
        assert_eq!(cfg.actor_sync_every, 10);
        assert_eq!(cfg.n_step, 3);
    }

    #[test]
    fn invalid_configs_rejected() {
        for cfg in [
            TrainConfig { gamma: 0.0, ..Default::default() },
            TrainConfig { gamma: 1.01, ..Default::default() },
            TrainConfig { n_step: 0, ..Default::default() },
            TrainConfig { sad: false, broadcast_all_greedy: true, ..Default::default() },
            TrainConfig { grad_clip: Some(0.0), ..Default::default() },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("VDN".parse::<Mode>().unwrap(), Mode::Vdn);
        assert_eq!("iql".parse::<Mode>().unwrap(), Mode::Iql);
        assert!("qmix".parse::<Mode>().is_err());
        assert_eq!(Mode::Vdn.to_string(), "vdn");
    }

    #[test]
    fn greedy_slot_modes() {
        let mut cfg = TrainConfig { sad: false, ..Default::default() };
        assert_eq!(cfg.greedy_slots(), GreedySlots::Off);
        cfg.sad = true;
        assert_eq!(cfg.greedy_slots(), GreedySlots::Acting);
        cfg.broadcast_all_greedy = true;
        assert_eq!(cfg.greedy_slots(), GreedySlots::All);
    }
}
