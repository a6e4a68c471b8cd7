//! Env-step rate of one batched actor, for comparing lockstep widths.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::SeedableRng;
use sad_core::RngStream;
use sad_hanabi::{Encoder, GameConfig};
use sad_nn::NetParams;
use sad_train::{ActorConfig, SeedSource, SlotSource, TrainConfig, VecActor};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throughput {
    pub envs: usize,
    pub env_steps: u64,
    pub secs: f64,
}

impl Throughput {
    pub fn steps_per_sec(&self) -> f64 {
        self.env_steps as f64 / self.secs
    }
}

/// Step `envs` games in lockstep through a randomly initialised network until at
/// least `min_steps` env steps and `min_secs` seconds have passed. Episodes are
/// recorded exactly as during training.
pub fn measure_throughput(
    players: usize,
    train: &TrainConfig,
    envs: usize,
    min_steps: u64,
    min_secs: f64,
    seed: u64,
) -> Result<Throughput, HarnessError> {
    let game = GameConfig::new(players).map_err(|e| HarnessError::Config(e.to_string()))?;
    let enc = Encoder::new(players, game.hand_size()).with_greedy(train.greedy_slots());
    let params = NetParams::init(train.net_config(&enc), &mut StdRng::seed_from_u64(seed));
    let cfg = ActorConfig {
        game,
        envs,
        epsilon: 0.1,
        train: train.clone(),
        priority_eta: 0.9,
        source: SlotSource::SideChannel,
        record: true,
    };
    let mut actor = VecActor::new(cfg, SeedSource::Stream(RngStream::new(seed, 1)), RngStream::new(seed, 2))?;
    // one untimed step to size buffers
    actor.step(&params)?;
    let base = actor.env_steps();
    let start = Instant::now();
    loop {
        actor.step(&params)?;
        let secs = start.elapsed().as_secs_f64();
        let steps = actor.env_steps() - base;
        if steps >= min_steps && secs >= min_secs {
            return Ok(Throughput {
                envs,
                env_steps: steps,
                secs,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_steps_of_every_game() {
        let train = TrainConfig {
            hidden: 16,
            lstm_layers: 1,
            ..TrainConfig::default()
        };
        let t = measure_throughput(2, &train, 4, 40, 0.0, 0).unwrap();
        assert!(t.env_steps >= 40);
        assert_eq!(t.env_steps % 4, 0);
        assert!(t.steps_per_sec() > 0.0);
    }
}
