use std::sync::Arc;

use rand::Rng;
use sad_nn::{clip_grad_norm, Adam, NetConfig, NetParams, RecurrentState};
use sad_replay::EpisodeRecord;

use crate::batch::Batch;
use crate::config::TrainConfig;
use crate::loss::{batch_loss, LossReport};
use crate::TrainError;

/// Online and target networks plus the optimizer.
#[derive(Debug, Clone)]
pub struct Learner {
    cfg: TrainConfig,
    online: NetParams<f32>,
    target: NetParams<f32>,
    adam: Adam<f32>,
    updates: u64,
}

impl Learner {
    pub fn new<R: Rng + ?Sized>(cfg: TrainConfig, net: NetConfig, rng: &mut R) -> Result<Self, TrainError> {
        Self::from_params(cfg, NetParams::init(net, rng))
    }

    pub fn from_params(cfg: TrainConfig, params: NetParams<f32>) -> Result<Self, TrainError> {
        cfg.validate()?;
        Ok(Self {
            adam: Adam::new(cfg.adam, &params),
            target: params.clone(),
            online: params,
            cfg,
            updates: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn online(&self) -> &NetParams<f32> {
        &self.online
    }

    pub fn target(&self) -> &NetParams<f32> {
        &self.target
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Whether actors should receive fresh weights after the latest update.
    pub fn should_publish(&self) -> bool {
        self.updates % self.cfg.actor_sync_every == 0
    }

    pub fn sync_target(&mut self) {
        self.target = self.online.clone();
    }

    /// One gradient step on sampled episodes with their importance weights. The
    /// target network is refreshed every `target_sync_every` updates.
    pub fn update(&mut self, episodes: Vec<Arc<EpisodeRecord>>, weights: &[f64]) -> Result<LossReport, TrainError> {
        let batch = Batch::<f32>::assemble(episodes)?;
        let seqs = batch.sequences();
        let init = RecurrentState::zeros(&self.online.cfg, seqs);
        let out = self.online.forward(&batch.obs, batch.steps, seqs, &init, true)?;
        let tgt = self.target.forward(&batch.obs, batch.steps, seqs, &init, false)?;
        let loss = batch_loss(&batch, &out.q, &tgt.q, &out.aux, weights, &self.cfg)?;
        let daux = (!loss.daux.is_empty()).then_some(loss.daux.as_slice());
        let mut grads = self.online.backward(&out, &loss.dq, daux)?;
        if let Some(max) = self.cfg.grad_clip {
            clip_grad_norm(&mut grads, max);
        }
        self.adam.step(&mut self.online, &grads)?;
        self.updates += 1;
        if self.updates % self.cfg.target_sync_every == 0 {
            self.sync_target();
        }
        Ok(loss.report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    /// One agent, one observation feature, two actions; reward 1 for action 0.
    fn bandit(action: u16) -> Arc<EpisodeRecord> {
        let mut e = EpisodeRecord::new(1, 1, 2, 0);
        e.push_observation(&[1.0], &[true, true], true, &[]);
        e.push_transition(&[action], &[action], if action == 0 { 1.0 } else { 0.0 });
        e.push_observation(&[0.0], &[true, true], true, &[]);
        Arc::new(e)
    }

    #[test]
    fn learns_a_bandit_and_syncs_target() {
        let cfg = TrainConfig {
            n_step: 1,
            target_sync_every: 50,
            hidden: 8,
            lstm_layers: 1,
            adam: sad_nn::AdamConfig { lr: 1e-2, ..Default::default() },
            ..Default::default()
        };
        let net = NetConfig { input_dim: 1, hidden: 8, lstm_layers: 1, num_actions: 2, aux_slots: 0 };
        let mut l = Learner::new(cfg, net, &mut StdRng::seed_from_u64(0)).unwrap();
        let mut first = None;
        let mut last = 0.0;
        for i in 0..400 {
            let r = l.update(vec![bandit(0), bandit(1)], &[1.0, 1.0]).unwrap();
            first.get_or_insert(r.td_loss);
            last = r.td_loss;
            if i == 48 {
                assert_ne!(l.online().checksum(), l.target().checksum());
            }
            if i == 49 {
                assert_eq!(l.online().checksum(), l.target().checksum());
            }
        }
        assert!(last < 0.01 * first.unwrap(), "{first:?} -> {last}");
        let init = RecurrentState::zeros(&net, 1);
        let q = l.online().forward(&[1.0], 1, 1, &init, false).unwrap().q;
        assert!((q[0] - 1.0).abs() < 0.05 && q[1].abs() < 0.05, "{q:?}");
        assert_eq!(l.updates(), 400);
        assert!(l.should_publish());
    }
}
