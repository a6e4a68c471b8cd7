//! Saving a trained network with the game settings it was trained under, and
//! greedy evaluation of a saved one.

use std::path::Path;

use sad_hanabi::{GameConfig, GreedySlots, ENCODER_VERSION};
use sad_nn::{Checkpoint, NetParams};
use sad_train::{evaluate, EvalOutcome, SlotSource};

use crate::config::RunnerConfig;
use crate::HarnessError;

const EVAL_ENVS: usize = 64;

pub fn save_checkpoint(
    params: &NetParams<f32>,
    cfg: &RunnerConfig,
    updates: u64,
    dir: &Path,
) -> Result<(), HarnessError> {
    let mut ck = Checkpoint::new(params.clone(), ENCODER_VERSION);
    let t = &cfg.train;
    for (k, v) in [
        ("players", cfg.env.players.to_string()),
        ("max_steps", cfg.env.max_steps.to_string()),
        ("mode", t.mode.clone()),
        ("sad", t.sad.to_string()),
        ("broadcast_all_greedy", t.broadcast_all_greedy.to_string()),
        ("aux", t.aux.to_string()),
        ("seed", cfg.seed.to_string()),
        ("updates", updates.to_string()),
    ] {
        ck.meta.insert(k.to_string(), v);
    }
    ck.save(dir)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointEval {
    pub mean: f64,
    pub sem: f64,
    pub histogram: [u64; 26],
    pub win_rate: f64,
    pub outcome: EvalOutcome,
}

impl From<EvalOutcome> for CheckpointEval {
    fn from(outcome: EvalOutcome) -> Self {
        let (mean, sem) = outcome.mean_sem();
        Self {
            mean,
            sem,
            histogram: outcome.histogram(),
            win_rate: outcome.win_rate(),
            outcome,
        }
    }
}

/// Game settings and greedy-input layout recorded in a checkpoint.
pub fn checkpoint_game(ck: &Checkpoint<f32>) -> Result<(GameConfig, GreedySlots), HarnessError> {
    let get = |k: &str| {
        ck.meta
            .get(k)
            .ok_or_else(|| HarnessError::Checkpoint(format!("manifest lacks `meta {k}`")))
    };
    let parse_err = |k: &str, v: &str| HarnessError::Checkpoint(format!("bad value `{v}` for meta {k}"));
    let p = get("players")?;
    let players: usize = p.parse().map_err(|_| parse_err("players", p))?;
    let mut game = GameConfig::new(players).map_err(|e| HarnessError::Checkpoint(e.to_string()))?;
    if let Some(m) = ck.meta.get("max_steps") {
        game.max_steps = m.parse().map_err(|_| parse_err("max_steps", m))?;
    }
    let flag = |k: &str| -> Result<bool, HarnessError> {
        match ck.meta.get(k).map(String::as_str) {
            None | Some("false") => Ok(false),
            Some("true") => Ok(true),
            Some(v) => Err(parse_err(k, v)),
        }
    };
    let greedy = match (flag("sad")?, flag("broadcast_all_greedy")?) {
        (false, _) => GreedySlots::Off,
        (true, false) => GreedySlots::Acting,
        (true, true) => GreedySlots::All,
    };
    Ok((game, greedy))
}

/// Greedy decentralized evaluation of the checkpoint in `dir` on `games` seeded
/// games. Fails when the checkpoint was written for a different observation
/// encoding.
pub fn evaluate_checkpoint(dir: &Path, games: usize, seed: u64) -> Result<CheckpointEval, HarnessError> {
    if games == 0 {
        return Err(HarnessError::Config("evaluation needs at least one game".into()));
    }
    let ck = Checkpoint::<f32>::load_for_encoder(dir, ENCODER_VERSION)?;
    let (game, greedy) = checkpoint_game(&ck)?;
    let out = evaluate(&ck.params, game, greedy, games, seed, SlotSource::Executed, EVAL_ENVS.min(games))?;
    Ok(out.into())
}
