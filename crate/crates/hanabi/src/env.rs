use sad_core::env::validate_joint_action;
use sad_core::{Action, AgentId, EnvError, Step, TurnBasedEnv};

use crate::encode::{Encoder, GreedySlots};
use crate::state::{GameConfig, HanabiError, HanabiState};

/// What one agent sees at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct HanabiObservation {
    pub features: Vec<f32>,
    /// Mask over moves plus pass; a non-acting agent may only pass.
    pub legal: Vec<bool>,
}

/// Hanabi as a turn-based multi-agent environment.
///
/// Every agent submits an action each step; only the current player's action is a
/// move, the others pass. The greedy slot shown to agents comes either from the
/// executed moves ([`TurnBasedEnv::step`]) or from a side channel supplied by the
/// learner ([`HanabiEnv::step_with_greedy`]).
#[derive(Debug, Clone)]
pub struct HanabiEnv {
    state: HanabiState,
    encoder: Encoder,
    /// Slot contents in absolute seat order (one entry unless broadcasting all).
    greedy: Vec<Option<usize>>,
}

impl From<HanabiError> for EnvError {
    fn from(e: HanabiError) -> Self {
        match e {
            HanabiError::Terminal => EnvError::EpisodeFinished,
            HanabiError::RuleViolation(m) => EnvError::RuleViolation(m),
            HanabiError::PlayerCount(_) => EnvError::Domain(e.to_string()),
        }
    }
}

impl HanabiEnv {
    pub fn new(cfg: GameConfig, seed: u64, greedy: GreedySlots) -> Result<Self, HanabiError> {
        let state = HanabiState::with_config(cfg, seed)?;
        let encoder = Encoder::for_state(&state).with_greedy(greedy);
        Ok(Self {
            greedy: vec![None; encoder.greedy_slots()],
            state,
            encoder,
        })
    }

    pub fn reset(&mut self, seed: u64) {
        self.state = HanabiState::with_config(self.state.config(), seed).expect("config validated at construction");
        self.greedy.iter_mut().for_each(|g| *g = None);
    }

    pub fn state(&self) -> &HanabiState {
        &self.state
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn num_actions(&self) -> usize {
        self.encoder.num_actions()
    }

    pub fn pass_action(&self) -> usize {
        self.encoder.pass_action()
    }

    pub fn score(&self) -> u32 {
        self.state.score()
    }

    /// Whether `agent` is (or, after a step-cap cut, would be) the player to move.
    pub fn is_turn_of(&self, agent: usize) -> bool {
        !self.state.ended_by_rules() && agent == self.state.current_player()
    }

    /// Legal mask over moves plus pass for `agent`. After a step-cap cut the mask
    /// shows the moves the rules would still allow, for bootstrapping.
    pub fn legal_mask(&self, agent: usize) -> Vec<bool> {
        let mut mask = vec![false; self.num_actions()];
        if !self.is_turn_of(agent) {
            mask[self.pass_action()] = true;
        } else {
            let moves = self.state.legal_moves_ignoring_cap();
            mask[..moves.len()].copy_from_slice(&moves);
        }
        mask
    }

    pub fn observe_into(&self, agent: usize, features: &mut [f32]) {
        let p = self.state.players();
        if self.encoder.greedy == GreedySlots::All {
            let rel: Vec<Option<usize>> = (0..p).map(|k| self.greedy[(agent + k) % p]).collect();
            self.encoder.encode_into(&self.state, agent, &rel, features);
        } else {
            self.encoder.encode_into(&self.state, agent, &self.greedy, features);
        }
    }

    /// Training step: `greedy` holds each agent's greedy action (absolute seat order),
    /// which replaces the executed move in the greedy slot for the next observation.
    pub fn step_with_greedy(&mut self, joint_action: &[Action], greedy: &[usize]) -> Result<Step, EnvError> {
        let acting = self.acting_agent().ok_or(EnvError::EpisodeFinished)?;
        if greedy.len() != self.state.players() {
            return Err(EnvError::RuleViolation(format!(
                "{} greedy actions for {} agents",
                greedy.len(),
                self.state.players()
            )));
        }
        let step = self.apply(joint_action, acting)?;
        self.fill_greedy(acting, greedy);
        Ok(step)
    }

    fn fill_greedy(&mut self, acting: AgentId, per_agent: &[usize]) {
        match self.encoder.greedy {
            GreedySlots::Off => {}
            GreedySlots::Acting => self.greedy[0] = Some(per_agent[acting.0]),
            GreedySlots::All => {
                for (slot, &g) in self.greedy.iter_mut().zip(per_agent) {
                    *slot = Some(g);
                }
            }
        }
    }

    fn apply(&mut self, joint_action: &[Action], acting: AgentId) -> Result<Step, EnvError> {
        let id = validate_joint_action(joint_action, self.state.players(), acting)?;
        let out = self.state.apply_move_id(id)?;
        Ok(Step {
            reward: out.reward,
            done: out.done,
            truncated: out.truncated,
        })
    }
}

impl TurnBasedEnv for HanabiEnv {
    type Observation = HanabiObservation;

    fn num_agents(&self) -> usize {
        self.state.players()
    }

    fn acting_agent(&self) -> Option<AgentId> {
        (!self.state.is_terminal()).then(|| AgentId(self.state.current_player()))
    }

    /// Evaluation step: the greedy slot shows the executed move.
    fn step(&mut self, joint_action: &[Action]) -> Result<Step, EnvError> {
        let acting = self.acting_agent().ok_or(EnvError::EpisodeFinished)?;
        let step = self.apply(joint_action, acting)?;
        let executed: Vec<usize> = joint_action
            .iter()
            .map(|a| a.id().unwrap_or(self.pass_action()))
            .collect();
        self.fill_greedy(acting, &executed);
        Ok(step)
    }

    fn observe(&self, agent: AgentId) -> HanabiObservation {
        let mut features = vec![0.0; self.encoder.dim()];
        self.observe_into(agent.0, &mut features);
        HanabiObservation {
            features,
            legal: self.legal_mask(agent.0),
        }
    }
}
