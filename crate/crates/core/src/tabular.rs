//! Tabular independent Q-learning on the matrix game, with an optional greedy-action
//! channel from player 1 to player 2.
//!
//! Player 1's information state is its card. Player 2's is its card, the action
//! player 1 executed and, when the channel is on, player 1's greedy action. Both
//! agents learn one-step Q-values against the terminal payoff.

use rayon::prelude::*;
use thiserror::Error;

use crate::matrix_game::{PayoffTensor, NUM_ACTIONS, NUM_CARDS};
use crate::rng::RngStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TabularError {
    #[error("invalid tabular config: {0}")]
    Config(String),
}

/// Information-state key of a Q-table row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InfoKey {
    P1 {
        card: usize,
    },
    P2 {
        card: usize,
        partner_action: usize,
        partner_greedy: Option<usize>,
    },
}

impl InfoKey {
    /// Number of components in the key.
    pub fn arity(&self) -> usize {
        match self {
            InfoKey::P1 { .. } => 1,
            InfoKey::P2 { partner_greedy: None, .. } => 2,
            InfoKey::P2 { .. } => 3,
        }
    }

    fn row(&self) -> usize {
        match *self {
            InfoKey::P1 { card } => card,
            InfoKey::P2 {
                card,
                partner_action,
                partner_greedy,
            } => {
                let g = partner_greedy.map_or(0, |g| g + 1);
                (card * NUM_ACTIONS + partner_action) * (NUM_ACTIONS + 1) + g
            }
        }
    }
}

/// Dense Q-table, zero-initialized for every key of one player role.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    rows: Vec<[f64; NUM_ACTIONS]>,
}

impl QTable {
    pub fn player1() -> Self {
        Self {
            rows: vec![[0.0; NUM_ACTIONS]; NUM_CARDS],
        }
    }

    pub fn player2() -> Self {
        Self {
            rows: vec![[0.0; NUM_ACTIONS]; NUM_CARDS * NUM_ACTIONS * (NUM_ACTIONS + 1)],
        }
    }

    pub fn row(&self, key: InfoKey) -> &[f64; NUM_ACTIONS] {
        &self.rows[key.row()]
    }

    pub fn row_mut(&mut self, key: InfoKey) -> &mut [f64; NUM_ACTIONS] {
        let i = key.row();
        &mut self.rows[i]
    }

    pub fn get(&self, key: InfoKey, action: usize) -> f64 {
        self.row(key)[action]
    }

    pub fn set(&mut self, key: InfoKey, action: usize, v: f64) {
        self.row_mut(key)[action] = v;
    }

    /// Argmax of a row; ties go to the lowest action id.
    pub fn greedy(&self, key: InfoKey) -> usize {
        argmax_lowest(self.row(key))
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().flatten().copied()
    }
}

pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct TablePair {
    pub p1: QTable,
    pub p2: QTable,
}

impl Default for TablePair {
    fn default() -> Self {
        Self {
            p1: QTable::player1(),
            p2: QTable::player2(),
        }
    }
}

impl TablePair {
    pub fn p2_key(card: usize, partner_action: usize, partner_greedy: Option<usize>, sad: bool) -> InfoKey {
        InfoKey::P2 {
            card,
            partner_action,
            partner_greedy: if sad { partner_greedy } else { None },
        }
    }
}

/// Constant exploration followed by a linear ramp to zero over the last
/// `decay_fraction` of training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub decay_fraction: f64,
}

impl EpsilonSchedule {
    pub fn constant(epsilon: f64) -> Self {
        Self {
            start: epsilon,
            decay_fraction: 0.0,
        }
    }

    pub fn at(&self, episode: usize, total: usize) -> f64 {
        if self.decay_fraction <= 0.0 || total == 0 {
            return self.start;
        }
        let decay_len = self.decay_fraction * total as f64;
        let decay_start = total as f64 - decay_len;
        let e = episode as f64;
        if e < decay_start {
            self.start
        } else {
            (self.start * (total as f64 - e) / decay_len).max(0.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularConfig {
    pub learning_rate: f64,
    pub epsilon: EpsilonSchedule,
    pub episodes: usize,
    pub seeds: usize,
    pub sad_enabled: bool,
    pub base_seed: u64,
    /// Learning-curve checkpoint spacing in episodes.
    pub eval_every: usize,
    pub payoff: PayoffTensor,
}

impl Default for TabularConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epsilon: EpsilonSchedule {
                start: 0.1,
                decay_fraction: 0.1,
            },
            episodes: 100_000,
            seeds: 100,
            sad_enabled: true,
            base_seed: 0,
            eval_every: 1_000,
            payoff: crate::matrix_game::default_payoff(),
        }
    }
}

impl TabularConfig {
    pub fn validate(&self) -> Result<(), TabularError> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(TabularError::Config(format!(
                "learning_rate {} outside (0, 1]",
                self.learning_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon.start) {
            return Err(TabularError::Config(format!(
                "epsilon {} outside [0, 1]",
                self.epsilon.start
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon.decay_fraction) {
            return Err(TabularError::Config("decay_fraction outside [0, 1]".into()));
        }
        if self.eval_every == 0 {
            return Err(TabularError::Config("eval_every must be positive".into()));
        }
        Ok(())
    }
}

/// What happened in one training episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    pub reward: f64,
    pub cards: [usize; 2],
    pub a1: usize,
    pub a1_greedy: usize,
    pub a2: usize,
    pub p2_key: InfoKey,
}

fn eps_greedy(greedy: usize, epsilon: f64, rng: &mut RngStream) -> usize {
    if epsilon > 0.0 && rng.bernoulli(epsilon) {
        rng.below(NUM_ACTIONS)
    } else {
        greedy
    }
}

/// Play one episode with exploration `epsilon` and apply one-step Q-learning to both
/// tables. The target at the terminal step is the payoff itself.
pub fn run_episode(
    tables: &mut TablePair,
    payoff: &PayoffTensor,
    learning_rate: f64,
    epsilon: f64,
    sad_enabled: bool,
    rng: &mut RngStream,
) -> EpisodeOutcome {
    let cards = [rng.below(NUM_CARDS), rng.below(NUM_CARDS)];
    let p1_key = InfoKey::P1 { card: cards[0] };
    let a1_greedy = tables.p1.greedy(p1_key);
    let a1 = eps_greedy(a1_greedy, epsilon, rng);

    let p2_key = TablePair::p2_key(cards[1], a1, Some(a1_greedy), sad_enabled);
    let a2 = eps_greedy(tables.p2.greedy(p2_key), epsilon, rng);

    let reward = payoff.get(cards[0], cards[1], a1, a2);
    let q1 = tables.p1.row_mut(p1_key);
    q1[a1] += learning_rate * (reward - q1[a1]);
    let q2 = tables.p2.row_mut(p2_key);
    q2[a2] += learning_rate * (reward - q2[a2]);

    EpisodeOutcome {
        reward,
        cards,
        a1,
        a1_greedy,
        a2,
        p2_key,
    }
}

/// Where player 2's greedy-action input comes from at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedySlotSource {
    /// Player 1's greedy action passed alongside the environment, as in training.
    SideChannel,
    /// The action player 1 actually executed, read from player 2's own observation.
    ExecutedAction,
}

/// Exact expected return of the greedy joint policy, enumerating the four card pairs.
pub fn evaluate_with(tables: &TablePair, payoff: &PayoffTensor, sad: bool, source: GreedySlotSource) -> f64 {
    let mut total = 0.0;
    for c1 in 0..NUM_CARDS {
        let greedy1 = tables.p1.greedy(InfoKey::P1 { card: c1 });
        // epsilon = 0: the executed action is the greedy action
        let a1 = greedy1;
        let slot = match source {
            GreedySlotSource::SideChannel => greedy1,
            GreedySlotSource::ExecutedAction => a1,
        };
        for c2 in 0..NUM_CARDS {
            let key = TablePair::p2_key(c2, a1, Some(slot), sad);
            let a2 = tables.p2.greedy(key);
            total += payoff.get(c1, c2, a1, a2);
        }
    }
    total / (NUM_CARDS * NUM_CARDS) as f64
}

/// Greedy evaluation using only decentralized information. Also checks that the
/// training-time side channel would have given the same answer.
pub fn evaluate(tables: &TablePair, payoff: &PayoffTensor, sad: bool) -> f64 {
    let decentralized = evaluate_with(tables, payoff, sad, GreedySlotSource::ExecutedAction);
    let centralized = evaluate_with(tables, payoff, sad, GreedySlotSource::SideChannel);
    assert_eq!(
        decentralized.to_bits(),
        centralized.to_bits(),
        "greedy slot must be recoverable from the executed action at epsilon = 0"
    );
    decentralized
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub seed: usize,
    pub episode: usize,
    pub eval_return: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub mean: f64,
    pub sem: f64,
    pub per_seed: Vec<f64>,
    pub curve: Vec<CurveRow>,
}

impl ExperimentResult {
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("seed,episode,eval_return\n");
        for row in &self.curve {
            out.push_str(&format!("{},{},{}\n", row.seed, row.episode, row.eval_return));
        }
        out
    }
}

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
pub fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Train a single seed and return its final evaluation and curve.
pub fn train_seed(cfg: &TabularConfig, seed: usize) -> (TablePair, f64, Vec<CurveRow>) {
    let mut rng = RngStream::new(cfg.base_seed, seed as u64);
    let mut tables = TablePair::default();
    let mut curve = vec![CurveRow {
        seed,
        episode: 0,
        eval_return: evaluate(&tables, &cfg.payoff, cfg.sad_enabled),
    }];
    for ep in 0..cfg.episodes {
        let eps = cfg.epsilon.at(ep, cfg.episodes);
        run_episode(&mut tables, &cfg.payoff, cfg.learning_rate, eps, cfg.sad_enabled, &mut rng);
        let done = ep + 1;
        if done % cfg.eval_every == 0 || done == cfg.episodes {
            curve.push(CurveRow {
                seed,
                episode: done,
                eval_return: evaluate(&tables, &cfg.payoff, cfg.sad_enabled),
            });
        }
    }
    let final_eval = curve.last().expect("curve starts with the initial evaluation").eval_return;
    (tables, final_eval, curve)
}

/// Independent trainings over `cfg.seeds` seeds, run in parallel.
pub fn experiment(cfg: &TabularConfig) -> Result<ExperimentResult, TabularError> {
    cfg.validate()?;
    if cfg.seeds < 2 {
        return Err(TabularError::Config("at least 2 seeds required".into()));
    }
    let runs: Vec<(f64, Vec<CurveRow>)> = (0..cfg.seeds)
        .into_par_iter()
        .map(|seed| {
            let (_, final_eval, curve) = train_seed(cfg, seed);
            (final_eval, curve)
        })
        .collect();
    let per_seed: Vec<f64> = runs.iter().map(|(v, _)| *v).collect();
    let (mean, sem) = mean_sem(&per_seed);
    let curve = runs.into_iter().flat_map(|(_, c)| c).collect();
    Ok(ExperimentResult {
        mean,
        sem,
        per_seed,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_game::{default_payoff, SAFE_ACTION};

    /// Player 1 signals card 1 with action 1 and card 2 with action 3; player 2 decodes.
    fn communicative_tables(sad: bool) -> TablePair {
        let mut t = TablePair::default();
        t.p1.set(InfoKey::P1 { card: 0 }, 0, 10.0);
        t.p1.set(InfoKey::P1 { card: 1 }, 2, 10.0);
        for c1 in 0..2 {
            let signal = if c1 == 0 { 0 } else { 2 };
            for c2 in 0..2 {
                let answer = if c1 == c2 { 0 } else { 2 };
                let key = TablePair::p2_key(c2, signal, Some(signal), sad);
                t.p2.set(key, answer, 10.0);
            }
        }
        t
    }

    fn always_safe_tables() -> TablePair {
        let mut t = TablePair::default();
        for c in 0..2 {
            t.p1.set(InfoKey::P1 { card: c }, SAFE_ACTION, 8.0);
            for g in [None, Some(SAFE_ACTION)] {
                t.p2.set(
                    InfoKey::P2 { card: c, partner_action: SAFE_ACTION, partner_greedy: g },
                    SAFE_ACTION,
                    8.0,
                );
            }
        }
        t
    }

    #[test]
    fn greedy_play_on_preset_tables() {
        let payoff = default_payoff();
        let mut rng = RngStream::new(3, 0);
        for sad in [false, true] {
            for _ in 0..20 {
                let mut t = communicative_tables(sad);
                let out = run_episode(&mut t, &payoff, 0.05, 0.0, sad, &mut rng);
                assert_eq!(out.reward, 10.0);
                let mut t = always_safe_tables();
                let out = run_episode(&mut t, &payoff, 0.05, 0.0, sad, &mut rng);
                assert_eq!(out.reward, 8.0);
            }
        }
    }

    #[test]
    fn key_arity_depends_on_channel() {
        let payoff = default_payoff();
        let mut rng = RngStream::new(0, 0);
        let mut t = TablePair::default();
        let with = run_episode(&mut t, &payoff, 0.1, 0.5, true, &mut rng);
        let without = run_episode(&mut t, &payoff, 0.1, 0.5, false, &mut rng);
        assert_eq!(with.p2_key.arity(), 3);
        assert_eq!(without.p2_key.arity(), 2);
    }

    #[test]
    fn evaluate_preset_tables() {
        let payoff = default_payoff();
        assert_eq!(evaluate(&communicative_tables(true), &payoff, true), 10.0);
        assert_eq!(evaluate(&communicative_tables(false), &payoff, false), 10.0);
        assert_eq!(evaluate(&always_safe_tables(), &payoff, true), 8.0);
        assert_eq!(evaluate(&always_safe_tables(), &payoff, false), 8.0);
    }

    #[test]
    fn zero_tables_evaluation_matches_enumeration() {
        // All-zero rows: every greedy choice is action 1 (index 0). Player 1 signals
        // with action 1 for both cards; player 2 answers 1, scoring 10 iff cards match.
        let payoff = default_payoff();
        let mut brute = 0.0;
        for c1 in 0..2 {
            for c2 in 0..2 {
                brute += payoff.get(c1, c2, 0, 0);
            }
        }
        brute /= 4.0;
        assert_eq!(brute, 5.0);
        assert_eq!(evaluate(&TablePair::default(), &payoff, true), brute);
        assert_eq!(evaluate(&TablePair::default(), &payoff, false), brute);
    }

    #[test]
    fn q_update_fixed_point() {
        let payoff = default_payoff();
        let mut t = always_safe_tables();
        let mut rng = RngStream::new(9, 0);
        for _ in 0..2000 {
            run_episode(&mut t, &payoff, 0.05, 0.0, false, &mut rng);
        }
        for c in 0..2 {
            assert!((t.p1.get(InfoKey::P1 { card: c }, SAFE_ACTION) - 8.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rewards_come_from_tensor() {
        let payoff = default_payoff();
        let entries: Vec<f64> = payoff.iter().collect();
        let mut t = TablePair::default();
        let mut rng = RngStream::new(1, 1);
        for _ in 0..5000 {
            let out = run_episode(&mut t, &payoff, 0.1, 0.3, true, &mut rng);
            assert!(entries.contains(&out.reward));
            assert_eq!(out.reward, payoff.get(out.cards[0], out.cards[1], out.a1, out.a2));
        }
    }

    #[test]
    fn epsilon_schedule_shape() {
        let s = EpsilonSchedule { start: 0.1, decay_fraction: 0.1 };
        assert_eq!(s.at(0, 1000), 0.1);
        assert_eq!(s.at(899, 1000), 0.1);
        assert!((s.at(950, 1000) - 0.05).abs() < 1e-12);
        assert!(s.at(999, 1000) > 0.0);
        assert_eq!(EpsilonSchedule::constant(0.3).at(999, 1000), 0.3);
    }

    #[test]
    fn zero_episode_experiment_is_initial_evaluation() {
        let cfg = TabularConfig { episodes: 0, seeds: 2, ..Default::default() };
        let r = experiment(&cfg).unwrap();
        assert_eq!(r.per_seed, vec![5.0, 5.0]);
        assert_eq!(r.mean, 5.0);
        assert_eq!(r.sem, 0.0);
    }

    #[test]
    fn config_errors() {
        let cfg = TabularConfig { seeds: 1, ..Default::default() };
        assert!(experiment(&cfg).is_err());
        let cfg = TabularConfig { learning_rate: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = TabularConfig { epsilon: EpsilonSchedule::constant(1.2), ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn mean_sem_arithmetic() {
        let (m, s) = mean_sem(&[5.0, 7.0]);
        assert_eq!(m, 6.0);
        assert!((s - 1.0).abs() < 1e-12);
    }
}
