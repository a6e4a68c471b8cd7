use sad_nn::net::AUX_CLASSES;
use sad_nn::{loss::softmax_cross_entropy, Scalar};
use sad_replay::NO_AUX_LABEL;

use crate::batch::Batch;
use crate::config::TrainConfig;
use crate::targets::{episode_targets, predicted, Scope};
use crate::TrainError;

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    /// Importance-weighted mean squared TD error over all decisions in the batch.
    pub td_loss: f64,
    /// Mean cross entropy per labelled card slot; 0 without the auxiliary head.
    pub aux_loss: f64,
    /// Signed TD errors per sampled episode, for priority updates.
    pub td_errors: Vec<Vec<f64>>,
}

impl LossReport {
    pub fn total(&self, aux_weight: f64) -> f64 {
        self.td_loss + aux_weight * self.aux_loss
    }
}

/// Loss values plus gradients with respect to the online Q values and aux logits.
#[derive(Debug, Clone)]
pub struct LossOutput<F> {
    pub report: LossReport,
    pub dq: Vec<F>,
    /// Already scaled by the auxiliary weight.
    pub daux: Vec<F>,
}

/// TD and auxiliary losses for a batch given network outputs on its rows.
///
/// `q_online` and `q_target` are `steps·sequences × actions`; `aux_logits` is
/// `steps·sequences × 3·aux_slots`, or empty to skip the auxiliary loss. Targets are
/// treated as constants.
pub fn batch_loss<F: Scalar>(
    batch: &Batch<F>,
    q_online: &[F],
    q_target: &[F],
    aux_logits: &[F],
    weights: &[f64],
    cfg: &TrainConfig,
) -> Result<LossOutput<F>, TrainError> {
    let rows = batch.steps * batch.sequences();
    let na = batch.num_actions;
    if q_online.len() != rows * na || q_target.len() != rows * na {
        return Err(TrainError::Shape(format!("Q outputs do not cover {rows} rows of {na} actions")));
    }
    if weights.len() != batch.episodes.len() {
        return Err(TrainError::Shape(format!(
            "{} importance weights for {} episodes",
            weights.len(),
            batch.episodes.len()
        )));
    }

    let mut dq = vec![F::zero(); q_online.len()];
    let mut errors = Vec::with_capacity(batch.episodes.len());
    let mut weighted = Vec::new();
    for (e, ep) in batch.episodes.iter().enumerate() {
        let (on, tg) = (batch.view(q_online, e, na), batch.view(q_target, e, na));
        let targets = episode_targets(ep, on, tg, cfg.mode, cfg.gamma, cfg.n_step)?;
        let mut deltas = Vec::with_capacity(targets.len());
        for x in targets {
            let delta = x.y - predicted(ep, on, x.t, x.scope);
            deltas.push(delta);
            weighted.push((e, x, delta));
        }
        errors.push(deltas);
    }

    let count = weighted.len().max(1) as f64;
    let mut td_loss = 0.0;
    for (e, x, delta) in weighted {
        let w = weights[e];
        td_loss += w * delta * delta;
        let g = F::from_f64_lossy(-2.0 * w * delta / count);
        let ep = &batch.episodes[e];
        let agents = match x.scope {
            Scope::Joint => 0..ep.agents,
            Scope::Agent(a) => a..a + 1,
        };
        for a in agents {
            let r = batch.row(x.t, e, a);
            dq[r * na + ep.action_at(x.t, a)] += g;
        }
    }
    td_loss /= count;

    let (aux_loss, daux) = if aux_logits.is_empty() || batch.aux_slots == 0 {
        (0.0, Vec::new())
    } else {
        aux_loss(batch, aux_logits, cfg.aux_weight)?
    };

    if !(td_loss.is_finite() && aux_loss.is_finite()) {
        return Err(TrainError::NonFinite(format!("loss (td {td_loss}, aux {aux_loss})")));
    }
    Ok(LossOutput {
        report: LossReport {
            td_loss,
            aux_loss,
            td_errors: errors,
        },
        dq,
        daux,
    })
}

/// Mean cross entropy over every labelled slot at steps `0..len` of every sequence.
fn aux_loss<F: Scalar>(batch: &Batch<F>, logits: &[F], weight: f64) -> Result<(f64, Vec<F>), TrainError> {
    let width = AUX_CLASSES * batch.aux_slots;
    let rows = batch.steps * batch.sequences();
    if logits.len() != rows * width {
        return Err(TrainError::Shape(format!("aux logits do not cover {rows} rows of {width}")));
    }
    let mut grad = vec![F::zero(); logits.len()];
    let mut total = 0.0;
    let mut count = 0usize;
    for (e, ep) in batch.episodes.iter().enumerate() {
        for t in 0..ep.len {
            for a in 0..ep.agents {
                let r = batch.row(t, e, a);
                for (s, &label) in ep.aux_at(t, a).iter().enumerate() {
                    if label == NO_AUX_LABEL {
                        continue;
                    }
                    let at = r * width + s * AUX_CLASSES;
                    let loss = softmax_cross_entropy(
                        &logits[at..at + AUX_CLASSES],
                        label as usize,
                        &mut grad[at..at + AUX_CLASSES],
                    );
                    total += loss.to_f64().expect("finite loss");
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        return Ok((0.0, grad));
    }
    let scale = F::from_f64_lossy(weight / count as f64);
    grad.iter_mut().for_each(|g| *g *= scale);
    Ok((total / count as f64, grad))
}
