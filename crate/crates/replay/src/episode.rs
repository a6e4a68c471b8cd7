use crate::ReplayError;

/// Label value for an empty hand slot.
pub const NO_AUX_LABEL: u8 = u8::MAX;

/// One stored episode.
///
/// Per-agent arrays are time-major: entry `(t, a)` lives at `t * agents + a`.
/// Observations, legal masks, acting flags and auxiliary labels have `len + 1`
/// rows so the observation after the last transition is available for
/// bootstrapping a truncated episode. Actions, greedy actions and rewards have
/// `len` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    /// Sequences stored: every player for a joint record, one for a per-agent one.
    pub agents: usize,
    pub obs_dim: usize,
    pub num_actions: usize,
    pub aux_slots: usize,
    pub len: usize,
    pub obs: Vec<f32>,
    pub legal: Vec<bool>,
    pub acting: Vec<bool>,
    /// `(len + 1) × agents × aux_slots` class ids, [`NO_AUX_LABEL`] for empty slots.
    pub aux: Vec<u8>,
    pub actions: Vec<u16>,
    pub greedy: Vec<u16>,
    /// Shared team reward per transition.
    pub rewards: Vec<f32>,
    /// The episode ended by the step cap rather than by the rules.
    pub truncated: bool,
}

impl EpisodeRecord {
    pub fn new(agents: usize, obs_dim: usize, num_actions: usize, aux_slots: usize) -> Self {
        Self {
            agents,
            obs_dim,
            num_actions,
            aux_slots,
            len: 0,
            obs: Vec::new(),
            legal: Vec::new(),
            acting: Vec::new(),
            aux: Vec::new(),
            actions: Vec::new(),
            greedy: Vec::new(),
            rewards: Vec::new(),
            truncated: false,
        }
    }

    /// Append the per-agent view at the current time step. Call `len + 1` times.
    pub fn push_observation(&mut self, obs: &[f32], legal: &[bool], acting: bool, aux: &[u8]) {
        self.obs.extend_from_slice(obs);
        self.legal.extend_from_slice(legal);
        self.acting.push(acting);
        self.aux.extend_from_slice(aux);
    }

    /// Append one transition: per-agent executed and greedy actions plus the reward.
    pub fn push_transition(&mut self, actions: &[u16], greedy: &[u16], reward: f32) {
        self.actions.extend_from_slice(actions);
        self.greedy.extend_from_slice(greedy);
        self.rewards.push(reward);
        self.len += 1;
    }

    pub fn pass_action(&self) -> usize {
        self.num_actions - 1
    }

    pub fn obs_at(&self, t: usize, agent: usize) -> &[f32] {
        let r = t * self.agents + agent;
        &self.obs[r * self.obs_dim..(r + 1) * self.obs_dim]
    }

    pub fn legal_at(&self, t: usize, agent: usize) -> &[bool] {
        let r = t * self.agents + agent;
        &self.legal[r * self.num_actions..(r + 1) * self.num_actions]
    }

    pub fn acting_at(&self, t: usize, agent: usize) -> bool {
        self.acting[t * self.agents + agent]
    }

    pub fn action_at(&self, t: usize, agent: usize) -> usize {
        self.actions[t * self.agents + agent] as usize
    }

    pub fn greedy_at(&self, t: usize, agent: usize) -> usize {
        self.greedy[t * self.agents + agent] as usize
    }

    pub fn aux_at(&self, t: usize, agent: usize) -> &[u8] {
        let r = t * self.agents + agent;
        &self.aux[r * self.aux_slots..(r + 1) * self.aux_slots]
    }

    pub fn episode_return(&self) -> f64 {
        self.rewards.iter().map(|&r| r as f64).sum()
    }

    /// Field lengths agree; every executed and greedy action is legal; agents not
    /// acting pass.
    pub fn validate(&self) -> Result<(), ReplayError> {
        let rows = (self.len + 1) * self.agents;
        let bad = |m: String| Err(ReplayError::InvalidEpisode(m));
        if self.agents == 0 || self.num_actions == 0 {
            return bad("empty agent or action dimension".into());
        }
        if self.obs.len() != rows * self.obs_dim
            || self.legal.len() != rows * self.num_actions
            || self.acting.len() != rows
            || self.aux.len() != rows * self.aux_slots
        {
            return bad(format!("per-step arrays do not cover {} observation rows", self.len + 1));
        }
        if self.actions.len() != self.len * self.agents
            || self.greedy.len() != self.len * self.agents
            || self.rewards.len() != self.len
        {
            return bad(format!("transition arrays do not cover {} steps", self.len));
        }
        for t in 0..self.len {
            for a in 0..self.agents {
                let legal = self.legal_at(t, a);
                let (act, greedy) = (self.action_at(t, a), self.greedy_at(t, a));
                if act >= self.num_actions || !legal[act] {
                    return bad(format!("illegal action {act} at step {t} agent {a}"));
                }
                if greedy >= self.num_actions || !legal[greedy] {
                    return bad(format!("illegal greedy action {greedy} at step {t} agent {a}"));
                }
                if !self.acting_at(t, a) && act != self.pass_action() {
                    return bad(format!("agent {a} acted out of turn at step {t}"));
                }
            }
        }
        Ok(())
    }

    /// Approximate heap footprint in bytes.
    pub fn heap_bytes(&self) -> usize {
        self.obs.len() * 4
            + self.legal.len()
            + self.acting.len()
            + self.aux.len()
            + (self.actions.len() + self.greedy.len()) * 2
            + self.rewards.len() * 4
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two agents, two actions (0 = move, 1 = pass), alternating turns.
    fn toy(len: usize) -> EpisodeRecord {
        let mut e = EpisodeRecord::new(2, 3, 2, 1);
        for t in 0..=len {
            for a in 0..2 {
                let acting = t % 2 == a;
                let legal = if acting { [true, false] } else { [false, true] };
                e.push_observation(&[t as f32, a as f32, 0.0], &legal, acting, &[0]);
            }
            if t < len {
                let acts = if t % 2 == 0 { [0, 1] } else { [1, 0] };
                e.push_transition(&acts, &acts, 1.0);
            }
        }
        e
    }

    #[test]
    fn accessors_and_validation() {
        let e = toy(3);
        e.validate().unwrap();
        assert_eq!(e.len, 3);
        assert_eq!(e.obs_at(2, 1), &[2.0, 1.0, 0.0]);
        assert!(e.acting_at(1, 1));
        assert_eq!(e.action_at(1, 0), 1);
        assert_eq!(e.episode_return(), 3.0);
    }

    #[test]
    fn inconsistent_records_rejected() {
        let mut e = toy(2);
        e.rewards.pop();
        assert!(e.validate().is_err());
        let mut e = toy(2);
        e.actions[0] = 1; // acting agent passes where pass is illegal
        assert!(e.validate().is_err());
        let mut e = toy(2);
        e.obs.pop();
        assert!(e.validate().is_err());
    }
}
