//! Turn-based, fully cooperative Dec-POMDP interface.
//!
//! At every step exactly one agent acts; every other agent submits [`Action::Noop`].
//! Rewards are shared by the whole team.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("episode finished")]
    EpisodeFinished,
    #[error("rule violation: {0}")]
    RuleViolation(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Index of an agent in `[0, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(pub usize);

impl AgentId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent {}", self.0)
    }
}

/// An agent's contribution to a joint action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Noop,
    Act(usize),
}

impl Action {
    pub fn is_noop(self) -> bool {
        matches!(self, Action::Noop)
    }

    pub fn id(self) -> Option<usize> {
        match self {
            Action::Noop => None,
            Action::Act(id) => Some(id),
        }
    }
}

/// Result of one environment transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    /// Team reward, identical for every agent.
    pub reward: f64,
    pub done: bool,
    /// Episode was cut by a step cap rather than by the rules.
    pub truncated: bool,
}

pub trait TurnBasedEnv {
    type Observation;

    fn num_agents(&self) -> usize;

    /// Agent whose turn it is, `None` once the episode has finished.
    fn acting_agent(&self) -> Option<AgentId>;

    fn is_done(&self) -> bool {
        self.acting_agent().is_none()
    }

    /// Apply a joint action. Exactly the acting agent must submit a non-noop action.
    fn step(&mut self, joint_action: &[Action]) -> Result<Step, EnvError>;

    /// Deterministic observation for `agent`.
    fn observe(&self, agent: AgentId) -> Self::Observation;
}

/// Check that `joint_action` has one entry per agent and only `acting` plays a non-noop.
/// Returns the acting agent's action id.
pub fn validate_joint_action(
    joint_action: &[Action],
    num_agents: usize,
    acting: AgentId,
) -> Result<usize, EnvError> {
    if joint_action.len() != num_agents {
        return Err(EnvError::RuleViolation(format!(
            "joint action has {} entries, expected {num_agents}",
            joint_action.len()
        )));
    }
    let mut chosen = None;
    for (i, a) in joint_action.iter().enumerate() {
        match (i == acting.0, a) {
            (true, Action::Act(id)) => chosen = Some(*id),
            (true, Action::Noop) => {
                return Err(EnvError::RuleViolation(format!(
                    "acting {acting} submitted a noop"
                )))
            }
            (false, Action::Act(_)) => {
                return Err(EnvError::RuleViolation(format!(
                    "agent {i} acted out of turn"
                )))
            }
            (false, Action::Noop) => {}
        }
    }
    Ok(chosen.expect("acting agent index checked above"))
}

/// One recorded transition of a [`Trajectory`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub joint_action: Vec<Action>,
    pub reward: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn push(&mut self, joint_action: Vec<Action>, reward: f64) {
        self.steps.push(TrajectoryStep { joint_action, reward });
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    pub fn return_from(&self, t: usize, gamma: f64) -> Result<f64, EnvError> {
        discounted_return(&self.rewards(), gamma, t)
    }
}

/// `sum_{k >= t} gamma^(k - t) * rewards[k]`.
pub fn discounted_return(rewards: &[f64], gamma: f64, t: usize) -> Result<f64, EnvError> {
    if rewards.is_empty() {
        return Err(EnvError::Domain("empty reward list".into()));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(EnvError::Domain(format!("gamma {gamma} outside (0, 1]")));
    }
    if t >= rewards.len() {
        return Err(EnvError::Domain(format!(
            "t = {t} out of range for {} rewards",
            rewards.len()
        )));
    }
    // Horner from the back keeps the summation order fixed.
    Ok(rewards[t..].iter().rev().fold(0.0, |acc, r| r + gamma * acc))
}
