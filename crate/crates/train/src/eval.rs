use rand::RngCore;
use sad_core::tabular::mean_sem;
use sad_core::RngStream;
use sad_hanabi::{GameConfig, GreedySlots, HanabiState};
use sad_nn::NetParams;

use crate::config::TrainConfig;
use crate::rollout::{ActorConfig, SeedSource, SlotSource, VecActor};
use crate::TrainError;

const EVAL_SEED_STREAM: u64 = 0xe7a1;
const RANDOM_POLICY_STREAM: u64 = 0x7a2d;

/// Deterministic game seeds for an evaluation run.
pub fn eval_seeds(seed: u64, games: usize) -> Vec<u64> {
    let mut rng = RngStream::new(seed, EVAL_SEED_STREAM);
    (0..games).map(|_| rng.next_u64()).collect()
}

/// Final scores, in game order, and the executed moves of every game.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub scores: Vec<u32>,
    pub moves: Vec<Vec<usize>>,
}

impl EvalOutcome {
    pub fn mean(&self) -> f64 {
        self.mean_sem().0
    }

    /// Standard error of the mean score.
    pub fn sem(&self) -> f64 {
        self.mean_sem().1
    }

    pub fn mean_sem(&self) -> (f64, f64) {
        let v: Vec<f64> = self.scores.iter().map(|&s| s as f64).collect();
        mean_sem(&v)
    }

    /// Number of games ending with each score 0..=25.
    pub fn histogram(&self) -> [u64; 26] {
        let mut h = [0u64; 26];
        for &s in &self.scores {
            h[s as usize] += 1;
        }
        h
    }

    /// Fraction of games with every firework completed.
    pub fn win_rate(&self) -> f64 {
        self.scores.iter().filter(|&&s| s == 25).count() as f64 / self.scores.len() as f64
    }
}

/// Play `games` greedy (epsilon 0) games with every seat driven by `params`.
/// `envs` games run side by side.
pub fn evaluate(
    params: &NetParams<f32>,
    game: GameConfig,
    greedy: GreedySlots,
    games: usize,
    seed: u64,
    source: SlotSource,
    envs: usize,
) -> Result<EvalOutcome, TrainError> {
    if games == 0 {
        return Err(TrainError::Config("evaluation needs at least one game".into()));
    }
    let train = TrainConfig {
        sad: greedy != GreedySlots::Off,
        broadcast_all_greedy: greedy == GreedySlots::All,
        aux: params.cfg.aux_slots > 0,
        hidden: params.cfg.hidden,
        lstm_layers: params.cfg.lstm_layers,
        ..TrainConfig::default()
    };
    let cfg = ActorConfig {
        game,
        envs: envs.clamp(1, games),
        epsilon: 0.0,
        train,
        priority_eta: 0.9,
        source,
        record: false,
    };
    let mut actor = VecActor::new(cfg, SeedSource::list(eval_seeds(seed, games)), RngStream::new(seed, 0))?;
    let mut scores = vec![0; games];
    let mut moves = vec![Vec::new(); games];
    while !actor.is_idle() {
        for f in actor.step(params)? {
            scores[f.game] = f.score;
            moves[f.game] = f.moves;
        }
    }
    Ok(EvalOutcome { scores, moves })
}

/// Scores of a policy choosing uniformly among legal moves, on the same game seeds
/// an evaluation with `seed` would use.
pub fn random_baseline(game: GameConfig, games: usize, seed: u64) -> Result<EvalOutcome, TrainError> {
    if games == 0 {
        return Err(TrainError::Config("baseline needs at least one game".into()));
    }
    let mut rng = RngStream::new(seed, RANDOM_POLICY_STREAM);
    let mut out = EvalOutcome {
        scores: Vec::with_capacity(games),
        moves: Vec::with_capacity(games),
    };
    for s in eval_seeds(seed, games) {
        let mut state = HanabiState::with_config(game, s)?;
        let mut moves = Vec::new();
        while !state.is_terminal() {
            let legal: Vec<usize> = state
                .legal_moves()?
                .iter()
                .enumerate()
                .filter_map(|(i, &l)| l.then_some(i))
                .collect();
            let id = legal[rng.below(legal.len())];
            state.apply_move_id(id)?;
            moves.push(id);
        }
        out.scores.push(state.score());
        out.moves.push(moves);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        let o = EvalOutcome {
            scores: vec![25, 0, 5, 25],
            moves: vec![Vec::new(); 4],
        };
        assert_eq!(o.mean(), 13.75);
        assert_eq!(o.win_rate(), 0.5);
        let h = o.histogram();
        assert_eq!((h[0], h[5], h[25]), (1, 1, 2));
        assert_eq!(h.iter().sum::<u64>(), 4);
    }

    #[test]
    fn random_baseline_is_deterministic_and_low() {
        let g = GameConfig::new(2).unwrap();
        let a = random_baseline(g, 200, 3).unwrap();
        assert_eq!(a, random_baseline(g, 200, 3).unwrap());
        assert!(a.mean() < 3.0, "{}", a.mean());
        assert!(random_baseline(g, 0, 3).is_err());
    }
}
