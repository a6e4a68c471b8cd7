//! n-step double-Q targets over whole stored episodes.
//!
//! A decision of the joint learner is every environment step. An independent
//! learner decides only on its own turns, so its n-step horizon spans its next n
//! turns and the team rewards collected in between, discounted per environment
//! step.

use sad_nn::Scalar;
use sad_replay::EpisodeRecord;

use crate::act::masked_argmax;
use crate::config::{Mode, TrainConfig};
use crate::TrainError;

/// Read-only view of Q rows for one episode inside a time-major batch:
/// step `t` of agent `a` lives at row `t * stride + offset + a`.
#[derive(Debug, Clone, Copy)]
pub struct QView<'a, F> {
    data: &'a [F],
    stride: usize,
    offset: usize,
    actions: usize,
}

impl<'a, F: Scalar> QView<'a, F> {
    pub fn new(data: &'a [F], stride: usize, offset: usize, actions: usize) -> Self {
        Self {
            data,
            stride,
            offset,
            actions,
        }
    }

    /// View over an episode stored on its own: rows `t * agents + a`.
    pub fn episode(data: &'a [F], agents: usize, actions: usize) -> Self {
        Self::new(data, agents, 0, actions)
    }

    pub fn row(&self, t: usize, agent: usize) -> &'a [F] {
        let r = t * self.stride + self.offset + agent;
        &self.data[r * self.actions..(r + 1) * self.actions]
    }

    fn rows_available(&self) -> usize {
        self.data.len() / self.actions
    }
}

/// Which agents' executed-action values form the predicted Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Sum over every agent of the record.
    Joint,
    Agent(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdTarget {
    pub t: usize,
    pub scope: Scope,
    pub y: f64,
}

impl Scope {
    fn agents(self, n: usize) -> std::ops::Range<usize> {
        match self {
            Scope::Joint => 0..n,
            Scope::Agent(a) => a..a + 1,
        }
    }
}

/// Sum over the scope of `Q(t, a, u_a)` for the executed actions.
pub fn predicted<F: Scalar>(ep: &EpisodeRecord, q: QView<'_, F>, t: usize, scope: Scope) -> f64 {
    scope
        .agents(ep.agents)
        .map(|a| q.row(t, a)[ep.action_at(t, a)].to_f64().expect("finite Q"))
        .sum()
}

/// Double-Q bootstrap value at observation row `t`: the target network's value of
/// the online network's legal argmax, summed over the scope.
pub fn bootstrap_value<F: Scalar>(
    ep: &EpisodeRecord,
    online: QView<'_, F>,
    target: QView<'_, F>,
    t: usize,
    scope: Scope,
) -> Result<f64, TrainError> {
    let mut v = 0.0;
    for a in scope.agents(ep.agents) {
        let best = masked_argmax(online.row(t, a), ep.legal_at(t, a)).ok_or(TrainError::NoLegalAction)?;
        v += target.row(t, a)[best].to_f64().expect("finite Q");
    }
    Ok(v)
}

fn check_shapes<F: Scalar>(ep: &EpisodeRecord, views: [&QView<'_, F>; 2]) -> Result<(), TrainError> {
    for v in views {
        if v.actions != ep.num_actions {
            return Err(TrainError::Shape(format!(
                "Q rows have {} actions, episode has {}",
                v.actions, ep.num_actions
            )));
        }
        let last = ep.len * v.stride + v.offset + ep.agents;
        if v.rows_available() < last {
            return Err(TrainError::Shape(format!(
                "Q view holds {} rows, episode of length {} needs {last}",
                v.rows_available(),
                ep.len
            )));
        }
        if v.stride < v.offset + ep.agents {
            return Err(TrainError::Shape("Q view stride smaller than agent block".into()));
        }
    }
    Ok(())
}

/// n-step double-Q targets for every decision in `ep`.
///
/// For a decision at step `t` with the n-th next decision at `t'`,
/// `y = Σ_{k=t}^{t'-1} γ^(k-t) r_k + γ^(t'-t) V(t')`. Near the end the sum runs to
/// the last transition; the tail bootstraps at the final observation only when
/// the episode was cut by the step cap (and, for an independent learner, the
/// agent is the one to move there).
pub fn episode_targets<F: Scalar>(
    ep: &EpisodeRecord,
    online: QView<'_, F>,
    target: QView<'_, F>,
    mode: Mode,
    gamma: f64,
    n_step: usize,
) -> Result<Vec<TdTarget>, TrainError> {
    check_shapes(ep, [&online, &target])?;
    if n_step == 0 {
        return Err(TrainError::Config("n_step must be at least 1".into()));
    }
    let mut out = Vec::new();
    let mut decisions = Vec::with_capacity(ep.len);
    let scopes: Vec<Scope> = match mode {
        Mode::Vdn => vec![Scope::Joint],
        Mode::Iql => (0..ep.agents).map(Scope::Agent).collect(),
    };
    for scope in scopes {
        decisions.clear();
        decisions.extend((0..ep.len).filter(|&t| match scope {
            Scope::Joint => true,
            Scope::Agent(a) => ep.acting_at(t, a),
        }));
        for (i, &t) in decisions.iter().enumerate() {
            let (end, boot) = match decisions.get(i + n_step) {
                Some(&next) => (next, true),
                None => {
                    let can = ep.truncated
                        && match scope {
                            Scope::Joint => true,
                            Scope::Agent(a) => ep.acting_at(ep.len, a),
                        };
                    (ep.len, can)
                }
            };
            let mut y = 0.0;
            let mut discount = 1.0;
            for k in t..end {
                y += discount * ep.rewards[k] as f64;
                discount *= gamma;
            }
            if boot {
                y += discount * bootstrap_value(ep, online, target, end, scope)?;
            }
            out.push(TdTarget { t, scope, y });
        }
    }
    Ok(out)
}

/// Signed TD errors `y - Q` of every decision, in target order.
pub fn episode_td_errors<F: Scalar>(
    ep: &EpisodeRecord,
    online: QView<'_, F>,
    target: QView<'_, F>,
    cfg: &TrainConfig,
) -> Result<Vec<f64>, TrainError> {
    let targets = episode_targets(ep, online, target, cfg.mode, cfg.gamma, cfg.n_step)?;
    Ok(targets.iter().map(|x| x.y - predicted(ep, online, x.t, x.scope)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two agents alternating turns over `len` steps, two actions (0 = move, 1 = pass).
    fn alternating(len: usize, rewards: &[f32], truncated: bool) -> EpisodeRecord {
        let mut e = EpisodeRecord::new(2, 1, 2, 0);
        for t in 0..=len {
            for a in 0..2 {
                let acting = t % 2 == a;
                let legal = if acting { [true, false] } else { [false, true] };
                e.push_observation(&[0.0], &legal, acting, &[]);
            }
            if t < len {
                let acts = if t % 2 == 0 { [0, 1] } else { [1, 0] };
                e.push_transition(&acts, &acts, rewards[t]);
            }
        }
        e.truncated = truncated;
        e
    }

    #[test]
    fn terminal_one_step_target_is_reward() {
        let ep = alternating(1, &[4.0], false);
        let q = vec![7.0f64; 2 * 2 * 2];
        let v = QView::episode(&q, 2, 2);
        let t = episode_targets(&ep, v, v, Mode::Vdn, 0.9, 1).unwrap();
        assert_eq!(t, vec![TdTarget { t: 0, scope: Scope::Joint, y: 4.0 }]);
    }

    #[test]
    fn joint_prediction_is_the_sum() {
        let ep = alternating(1, &[0.0], false);
        // agent 0 executed move 0 with Q 2, agent 1 passed with Q 3
        let q = vec![2.0f64, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0];
        let v = QView::episode(&q, 2, 2);
        assert_eq!(predicted(&ep, v, 0, Scope::Joint), 5.0);
        assert_eq!(predicted(&ep, v, 0, Scope::Agent(0)), 2.0);
    }

    #[test]
    fn truncated_tail_bootstraps() {
        let ep = alternating(2, &[1.0, 2.0], true);
        // rows (t, a); at t = 2 agent 0 moves (legal [T, F]) and agent 1 passes
        let mut q = vec![0.0f64; 3 * 2 * 2];
        q[(2 * 2) * 2] = 10.0; // t=2, a=0, action 0
        q[(2 * 2 + 1) * 2 + 1] = 1.0; // t=2, a=1, pass
        let v = QView::episode(&q, 2, 2);
        let t = episode_targets(&ep, v, v, Mode::Vdn, 0.5, 3).unwrap();
        assert_eq!(t[0].y, 1.0 + 0.5 * 2.0 + 0.25 * 11.0);
        assert_eq!(t[1].y, 2.0 + 0.5 * 11.0);
        let ep = alternating(2, &[1.0, 2.0], false);
        let t = episode_targets(&ep, v, v, Mode::Vdn, 0.5, 3).unwrap();
        assert_eq!(t[0].y, 2.0);
    }

    #[test]
    fn independent_learner_skips_passes() {
        let ep = alternating(4, &[1.0, 0.0, 0.0, 8.0], false);
        let q = vec![0.0f64; 5 * 2 * 2];
        let v = QView::episode(&q, 2, 2);
        let t = episode_targets(&ep, v, v, Mode::Iql, 0.5, 1).unwrap();
        let scopes: Vec<(usize, Scope)> = t.iter().map(|x| (x.t, x.scope)).collect();
        assert_eq!(
            scopes,
            vec![(0, Scope::Agent(0)), (2, Scope::Agent(0)), (1, Scope::Agent(1)), (3, Scope::Agent(1))]
        );
        // agent 0 at t=2: rewards at steps 2 and 3 (its next turn would be 4, past the end)
        assert_eq!(t[1].y, 0.0 + 0.5 * 8.0);
        // agent 1 at t=1: steps 1, 2 then its next turn at 3 bootstraps with Q = 0
        assert_eq!(t[2].y, 0.0);
    }

    #[test]
    fn double_q_uses_online_argmax_and_target_value() {
        // one agent, three actions, the third illegal at the cut
        let mut ep = EpisodeRecord::new(1, 1, 3, 0);
        ep.push_observation(&[0.0], &[true, true, false], true, &[]);
        ep.push_transition(&[0], &[0], 1.5);
        ep.push_observation(&[0.0], &[true, true, false], true, &[]);
        ep.truncated = true;
        let online = [0.0f64, 0.0, 0.0, 5.0, 1.0, 50.0];
        let target = [0.0f64, 0.0, 0.0, 2.0, 9.0, 70.0];
        let (o, tg) = (QView::episode(&online, 1, 3), QView::episode(&target, 1, 3));
        assert_eq!(bootstrap_value(&ep, o, tg, 1, Scope::Joint).unwrap(), 2.0);
        // plain max over the target network would have picked 9
        assert_eq!(bootstrap_value(&ep, tg, tg, 1, Scope::Joint).unwrap(), 9.0);
        let t = episode_targets(&ep, o, tg, Mode::Vdn, 0.5, 1).unwrap();
        assert_eq!(t[0].y, 1.5 + 0.5 * 2.0);
    }

    #[test]
    fn shape_errors() {
        let ep = alternating(2, &[0.0, 0.0], false);
        let q = vec![0.0f64; 4];
        let v = QView::episode(&q, 2, 2);
        assert!(matches!(episode_targets(&ep, v, v, Mode::Vdn, 0.9, 1), Err(TrainError::Shape(_))));
        let q = vec![0.0f64; 3 * 2 * 3];
        let v = QView::episode(&q, 2, 3);
        assert!(matches!(episode_targets(&ep, v, v, Mode::Vdn, 0.9, 1), Err(TrainError::Shape(_))));
    }
}
