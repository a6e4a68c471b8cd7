use std::sync::Arc;

use sad_nn::Scalar;
use sad_replay::EpisodeRecord;

use crate::targets::QView;
use crate::TrainError;

/// Sampled episodes laid out time-major for one network call.
///
/// Every episode contributes `agents` sequences, padded with zero observations to
/// the longest episode plus its final observation. Row `t * sequences + e * agents + a`
/// holds step `t` of agent `a` in episode `e`.
#[derive(Debug, Clone)]
pub struct Batch<F> {
    pub episodes: Vec<Arc<EpisodeRecord>>,
    pub agents: usize,
    pub steps: usize,
    pub obs_dim: usize,
    pub num_actions: usize,
    pub aux_slots: usize,
    pub obs: Vec<F>,
}

impl<F: Scalar> Batch<F> {
    pub fn assemble(episodes: Vec<Arc<EpisodeRecord>>) -> Result<Self, TrainError> {
        let first = episodes
            .first()
            .ok_or_else(|| TrainError::Shape("empty batch".into()))?;
        let (agents, obs_dim, num_actions, aux_slots) = (first.agents, first.obs_dim, first.num_actions, first.aux_slots);
        if let Some(e) = episodes.iter().find(|e| {
            (e.agents, e.obs_dim, e.num_actions, e.aux_slots) != (agents, obs_dim, num_actions, aux_slots)
        }) {
            return Err(TrainError::Shape(format!(
                "episode with {} agents / {} features / {} actions / {} aux slots mixed into a batch of {agents} / {obs_dim} / {num_actions} / {aux_slots}",
                e.agents, e.obs_dim, e.num_actions, e.aux_slots
            )));
        }
        let steps = episodes.iter().map(|e| e.len + 1).max().unwrap_or(1);
        let seqs = episodes.len() * agents;
        let mut obs = vec![F::zero(); steps * seqs * obs_dim];
        for (e, ep) in episodes.iter().enumerate() {
            for t in 0..=ep.len {
                for a in 0..agents {
                    let r = t * seqs + e * agents + a;
                    for (dst, &src) in obs[r * obs_dim..(r + 1) * obs_dim].iter_mut().zip(ep.obs_at(t, a)) {
                        *dst = F::from_f64_lossy(src as f64);
                    }
                }
            }
        }
        Ok(Self {
            episodes,
            agents,
            steps,
            obs_dim,
            num_actions,
            aux_slots,
            obs,
        })
    }

    /// Number of sequences (episodes times agents).
    pub fn sequences(&self) -> usize {
        self.episodes.len() * self.agents
    }

    pub fn row(&self, t: usize, e: usize, a: usize) -> usize {
        t * self.sequences() + e * self.agents + a
    }

    /// View of episode `e` inside per-row outputs with `width` values per row.
    pub fn view<'a>(&self, data: &'a [F], e: usize, width: usize) -> QView<'a, F> {
        QView::new(data, self.sequences(), e * self.agents, width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ep(len: usize, agents: usize, tag: f32) -> Arc<EpisodeRecord> {
        let mut e = EpisodeRecord::new(agents, 2, 2, 0);
        for t in 0..=len {
            for a in 0..agents {
                e.push_observation(&[tag, (t * 10 + a) as f32], &[true, true], a == 0, &[]);
            }
            if t < len {
                e.push_transition(&vec![0; agents], &vec![0; agents], 0.0);
            }
        }
        Arc::new(e)
    }

    #[test]
    fn layout_and_padding() {
        let b = Batch::<f32>::assemble(vec![ep(2, 2, 1.0), ep(0, 2, 2.0)]).unwrap();
        assert_eq!((b.steps, b.sequences()), (3, 4));
        let r = b.row(2, 0, 1);
        assert_eq!(&b.obs[r * 2..r * 2 + 2], &[1.0, 21.0]);
        let r = b.row(0, 1, 1);
        assert_eq!(&b.obs[r * 2..r * 2 + 2], &[2.0, 1.0]);
        let r = b.row(1, 1, 0);
        assert_eq!(&b.obs[r * 2..r * 2 + 2], &[0.0, 0.0]);
    }

    #[test]
    fn mixed_shapes_rejected() {
        assert!(Batch::<f32>::assemble(vec![ep(1, 2, 0.0), ep(1, 1, 0.0)]).is_err());
        assert!(Batch::<f32>::assemble(vec![]).is_err());
    }
}
