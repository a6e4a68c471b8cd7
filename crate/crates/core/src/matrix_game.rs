//! Two-player, two-step cooperative communication game.
//!
//! Each player privately draws a card from `{1, 2}` (uniform, iid). Player 1 sees its
//! card and picks one of three actions; player 2 sees its own card plus player 1's
//! action and then picks one of three actions. The team payoff depends on both
//! cards and both actions.
//!
//! Internally cards and actions are zero-based: card `0` is card 1, action `1` is
//! action 2, and so on. The payoff file uses the same zero-based blocks but is
//! documented in the one-based terms players use.

use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::env::{validate_joint_action, Action, AgentId, EnvError, Step, TurnBasedEnv};
use crate::rng::RngStream;

pub const NUM_CARDS: usize = 2;
pub const NUM_ACTIONS: usize = 3;
/// Zero-based index of the safe "action 2".
pub const SAFE_ACTION: usize = 1;

#[derive(Debug, Error)]
pub enum PayoffError {
    #[error("payoff parse error: {0}")]
    Parse(String),
    #[error("payoff invariant violated: {}", .0.join("; "))]
    Invariant(Vec<String>),
    #[error("payoff io error: {0}")]
    Io(#[from] std::io::Error),
}

/// `payoff[c1][c2][a1][a2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffTensor {
    values: [[[[f64; NUM_ACTIONS]; NUM_ACTIONS]; NUM_CARDS]; NUM_CARDS],
}

impl PayoffTensor {
    pub fn from_fn(mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut values = [[[[0.0; NUM_ACTIONS]; NUM_ACTIONS]; NUM_CARDS]; NUM_CARDS];
        for (c1, by_c2) in values.iter_mut().enumerate() {
            for (c2, by_a1) in by_c2.iter_mut().enumerate() {
                for (a1, row) in by_a1.iter_mut().enumerate() {
                    for (a2, v) in row.iter_mut().enumerate() {
                        *v = f(c1, c2, a1, a2);
                    }
                }
            }
        }
        Self { values }
    }

    pub fn zeros() -> Self {
        Self::from_fn(|_, _, _, _| 0.0)
    }

    #[inline]
    pub fn get(&self, c1: usize, c2: usize, a1: usize, a2: usize) -> f64 {
        self.values[c1][c2][a1][a2]
    }

    pub fn set(&mut self, c1: usize, c2: usize, a1: usize, a2: usize, v: f64) {
        self.values[c1][c2][a1][a2] = v;
    }

    pub fn max(&self) -> f64 {
        self.iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Entries in file order: blocks (c1, c2), rows a1, columns a2.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().flatten().flatten().copied()
    }

    /// Expected payoff over uniform card draws of the card-independent pair `(a1, a2)`.
    pub fn expected(&self, a1: usize, a2: usize) -> f64 {
        let mut total = 0.0;
        for c1 in 0..NUM_CARDS {
            for c2 in 0..NUM_CARDS {
                total += self.get(c1, c2, a1, a2);
            }
        }
        total / (NUM_CARDS * NUM_CARDS) as f64
    }

    /// Check every structural property the game relies on; returns all failures at once.
    pub fn validate(&self) -> Result<(), PayoffError> {
        let mut failed = Vec::new();
        if self.iter().any(|v| !v.is_finite()) {
            failed.push("entries must be finite".to_string());
            return Err(PayoffError::Invariant(failed));
        }
        for c1 in 0..NUM_CARDS {
            for c2 in 0..NUM_CARDS {
                let safe = self.get(c1, c2, SAFE_ACTION, SAFE_ACTION);
                if safe != 8.0 {
                    failed.push(format!(
                        "payoff[{}][{}][2][2] = {safe}, must be 8",
                        c1 + 1,
                        c2 + 1
                    ));
                }
                let has_ten = (0..NUM_ACTIONS)
                    .any(|a1| (0..NUM_ACTIONS).any(|a2| self.get(c1, c2, a1, a2) == 10.0));
                if !has_ten {
                    failed.push(format!(
                        "card pair ({}, {}) has no 10-point joint action",
                        c1 + 1,
                        c2 + 1
                    ));
                }
            }
        }
        if self.max() != 10.0 {
            failed.push(format!("tensor maximum is {}, must be 10", self.max()));
        }
        let safe = self.expected(SAFE_ACTION, SAFE_ACTION);
        for a in (0..NUM_ACTIONS).filter(|&a| a != SAFE_ACTION) {
            if self.expected(a, SAFE_ACTION) >= safe || self.expected(SAFE_ACTION, a) >= safe {
                failed.push(format!(
                    "(2, 2) is not a strict Nash equilibrium: deviation to action {} is not worse",
                    a + 1
                ));
            }
        }
        let solution = solve_exhaustive(self);
        if solution.best_value != 10.0 {
            failed.push(format!(
                "best communicative value is {}, must be 10",
                solution.best_value
            ));
        }
        if solution.best_noncomm_value != 8.0 {
            failed.push(format!(
                "best non-communicative value is {}, must be 8",
                solution.best_noncomm_value
            ));
        }
        if failed.is_empty() {
            Ok(())
        } else {
            Err(PayoffError::Invariant(failed))
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(
            "# payoff[c1][c2][a1][a2]; one block per card pair (1,1) (1,2) (2,1) (2,2)\n\
             # rows: player 1 action 1..3, columns: player 2 action 1..3\n",
        );
        for c1 in 0..NUM_CARDS {
            for c2 in 0..NUM_CARDS {
                out.push_str(&format!("# cards ({}, {})\n", c1 + 1, c2 + 1));
                for a1 in 0..NUM_ACTIONS {
                    let row: Vec<String> = (0..NUM_ACTIONS)
                        .map(|a2| format!("{}", self.get(c1, c2, a1, a2)))
                        .collect();
                    out.push_str(&row.join(" "));
                    out.push('\n');
                }
            }
        }
        out
    }

    /// Parse the text layout without validating game invariants.
    pub fn parse(text: &str) -> Result<Self, PayoffError> {
        let mut numbers = Vec::with_capacity(36);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| {
                    PayoffError::Parse(format!("line {}: `{tok}` is not a number", lineno + 1))
                })?;
                numbers.push(v);
            }
        }
        if numbers.len() != 36 {
            return Err(PayoffError::Parse(format!(
                "expected 36 values, found {}",
                numbers.len()
            )));
        }
        let mut it = numbers.into_iter();
        Ok(Self::from_fn(|_, _, _, _| it.next().unwrap()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PayoffError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

impl fmt::Display for PayoffTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// The shipped tensor.
///
/// Action 2 from player 1 is a safe, uninformative move: player 2 scores 8 by
/// answering 2 and 4 otherwise. After a signal (action 1 or 3) player 2 scores 10
/// by answering 1 when the cards match and 3 when they differ, and 0 for anything
/// else.
pub fn default_payoff() -> PayoffTensor {
    PayoffTensor::from_fn(|c1, c2, a1, a2| {
        if a1 == SAFE_ACTION {
            if a2 == SAFE_ACTION {
                8.0
            } else {
                4.0
            }
        } else {
            let decode = if c1 == c2 { 0 } else { 2 };
            if a2 == decode {
                10.0
            } else {
                0.0
            }
        }
    })
}

/// Read, parse and validate a payoff file.
pub fn load_payoff(path: impl AsRef<Path>) -> Result<PayoffTensor, PayoffError> {
    let text = fs::read_to_string(path)?;
    let tensor = PayoffTensor::parse(&text)?;
    tensor.validate()?;
    Ok(tensor)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solution {
    pub best_value: f64,
    /// Best value when player 1's action ignores its card.
    pub best_noncomm_value: f64,
    /// Number of deterministic joint policies attaining `best_value`.
    pub optimal_policy_count: usize,
}

/// Enumerate all 3^2 deterministic player-1 policies (card -> action) against all
/// 3^6 deterministic player-2 policies ((action, card) -> action).
pub fn solve_exhaustive(tensor: &PayoffTensor) -> Solution {
    const P2_POLICIES: usize = 729;
    let mut best = f64::NEG_INFINITY;
    let mut best_noncomm = f64::NEG_INFINITY;
    let mut values = Vec::with_capacity(9 * P2_POLICIES);
    for p1 in 0..9usize {
        let p1_action = [p1 % 3, p1 / 3];
        let constant = p1_action[0] == p1_action[1];
        for p2 in 0..P2_POLICIES {
            // digit (a1 * 2 + c2) in base 3 is player 2's answer
            let p2_action = |a1: usize, c2: usize| (p2 / 3usize.pow((a1 * 2 + c2) as u32)) % 3;
            let mut total = 0.0;
            for c1 in 0..NUM_CARDS {
                let a1 = p1_action[c1];
                for c2 in 0..NUM_CARDS {
                    total += tensor.get(c1, c2, a1, p2_action(a1, c2));
                }
            }
            let value = total / 4.0;
            best = best.max(value);
            if constant {
                best_noncomm = best_noncomm.max(value);
            }
            values.push(value);
        }
    }
    let optimal_policy_count = values.iter().filter(|&&v| v == best).count();
    Solution {
        best_value: best,
        best_noncomm_value: best_noncomm,
        optimal_policy_count,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    P1ToAct,
    P2ToAct,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MatrixState {
    pub cards: [usize; 2],
    pub phase: Phase,
    pub a1: Option<usize>,
}

/// What one player sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MatrixObservation {
    pub own_card: usize,
    /// Player 1's executed action, visible to player 2 once it has been taken.
    pub partner_action: Option<usize>,
}

impl MatrixObservation {
    /// Card one-hot followed by a partner-action one-hot (all zero before it acts).
    pub fn features(&self) -> [f32; NUM_CARDS + NUM_ACTIONS] {
        let mut f = [0.0; NUM_CARDS + NUM_ACTIONS];
        f[self.own_card] = 1.0;
        if let Some(a) = self.partner_action {
            f[NUM_CARDS + a] = 1.0;
        }
        f
    }
}

#[derive(Debug, Clone)]
pub struct MatrixGame {
    payoff: PayoffTensor,
    state: MatrixState,
}

impl MatrixGame {
    pub fn new(payoff: PayoffTensor, rng: &mut RngStream) -> Self {
        let cards = [rng.below(NUM_CARDS), rng.below(NUM_CARDS)];
        Self::with_cards(payoff, cards)
    }

    pub fn with_cards(payoff: PayoffTensor, cards: [usize; 2]) -> Self {
        assert!(cards.iter().all(|&c| c < NUM_CARDS), "card out of range");
        Self {
            payoff,
            state: MatrixState {
                cards,
                phase: Phase::P1ToAct,
                a1: None,
            },
        }
    }

    pub fn state(&self) -> &MatrixState {
        &self.state
    }

    pub fn payoff(&self) -> &PayoffTensor {
        &self.payoff
    }
}

impl TurnBasedEnv for MatrixGame {
    type Observation = MatrixObservation;

    fn num_agents(&self) -> usize {
        2
    }

    fn acting_agent(&self) -> Option<AgentId> {
        match self.state.phase {
            Phase::P1ToAct => Some(AgentId(0)),
            Phase::P2ToAct => Some(AgentId(1)),
            Phase::Done => None,
        }
    }

    fn step(&mut self, joint_action: &[Action]) -> Result<Step, EnvError> {
        let acting = self.acting_agent().ok_or(EnvError::EpisodeFinished)?;
        let action = validate_joint_action(joint_action, 2, acting)?;
        if action >= NUM_ACTIONS {
            return Err(EnvError::RuleViolation(format!(
                "action id {action} outside [0, {NUM_ACTIONS})"
            )));
        }
        match self.state.phase {
            Phase::P1ToAct => {
                self.state.a1 = Some(action);
                self.state.phase = Phase::P2ToAct;
                Ok(Step {
                    reward: 0.0,
                    done: false,
                    truncated: false,
                })
            }
            Phase::P2ToAct => {
                let [c1, c2] = self.state.cards;
                let a1 = self.state.a1.expect("a1 recorded before player 2 acts");
                self.state.phase = Phase::Done;
                Ok(Step {
                    reward: self.payoff.get(c1, c2, a1, action),
                    done: true,
                    truncated: false,
                })
            }
            Phase::Done => unreachable!(),
        }
    }

    fn observe(&self, agent: AgentId) -> MatrixObservation {
        MatrixObservation {
            own_card: self.state.cards[agent.0],
            partner_action: if agent.0 == 1 { self.state.a1 } else { None },
        }
    }
}
