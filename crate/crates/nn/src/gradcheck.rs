//! Finite-difference check of [`NetParams::backward`] in 64-bit precision.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::loss::softmax_cross_entropy;
use crate::net::{NetConfig, NetParams, RecurrentState, AUX_CLASSES};
use crate::NnError;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Largest relative error over every parameter entry.
    pub max_rel_error: f64,
    /// Largest relative error per tensor name.
    pub per_tensor: Vec<(String, f64)>,
    pub entries_checked: usize,
    /// Analytic and numeric values at the worst entry.
    pub worst: (String, f64, f64),
}

/// Relative error with a denominator floor of 1e-5. Central differences on a loss of
/// order 1 with `h = 1e-5` carry about 1e-10 of round-off, so smaller gradients
/// cannot be resolved to a relative 1e-4 anyway.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-5)
}

/// Test loss over a random sequence batch: a fixed random linear functional of the
/// Q-values plus the mean cross entropy of the auxiliary logits against random
/// labels.
struct Probe {
    obs: Vec<f64>,
    coef: Vec<f64>,
    labels: Vec<usize>,
    steps: usize,
    batch: usize,
    init: RecurrentState<f64>,
}

impl Probe {
    fn loss(&self, p: &NetParams<f64>) -> Result<f64, NnError> {
        let out = p.forward(&self.obs, self.steps, self.batch, &self.init, false)?;
        let mut l: f64 = out.q.iter().zip(&self.coef).map(|(q, c)| q * c).sum();
        let mut scratch = [0.0; AUX_CLASSES];
        let scale = 1.0 / self.labels.len().max(1) as f64;
        for (k, &y) in self.labels.iter().enumerate() {
            l += scale * softmax_cross_entropy(&out.aux[k * AUX_CLASSES..(k + 1) * AUX_CLASSES], y, &mut scratch);
        }
        Ok(l)
    }

    fn grads(&self, p: &NetParams<f64>) -> Result<NetParams<f64>, NnError> {
        let out = p.forward(&self.obs, self.steps, self.batch, &self.init, true)?;
        let mut daux = vec![0.0; out.aux.len()];
        for (k, &y) in self.labels.iter().enumerate() {
            let r = k * AUX_CLASSES..(k + 1) * AUX_CLASSES;
            softmax_cross_entropy(&out.aux[r.clone()], y, &mut daux[r]);
        }
        let scale = 1.0 / self.labels.len().max(1) as f64;
        daux.iter_mut().for_each(|d| *d *= scale);
        let daux = (!daux.is_empty()).then_some(daux.as_slice());
        p.backward(&out, &self.coef, daux)
    }
}

/// Compare analytic gradients against central differences with step `h` on a
/// randomly initialized network. A non-zero initial recurrent state is used so
/// every path through the LSTM carries signal.
pub fn check_network(cfg: NetConfig, seed: u64, steps: usize, batch: usize, h: f64) -> Result<GradCheckReport, NnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = NetParams::<f64>::init(cfg, &mut rng);
    let rows = steps * batch;
    let mut init = RecurrentState::zeros(&cfg, batch);
    for v in init.h.iter_mut().chain(init.c.iter_mut()) {
        v.iter_mut().for_each(|x| *x = rng.gen_range(-0.5..0.5));
    }
    let probe = Probe {
        obs: (0..rows * cfg.input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        coef: (0..rows * cfg.num_actions).map(|_| rng.gen_range(-1.0..1.0) / rows as f64).collect(),
        labels: (0..rows * cfg.aux_slots).map(|_| rng.gen_range(0..AUX_CLASSES)).collect(),
        steps,
        batch,
        init,
    };
    let analytic = probe.grads(&params)?;
    let names = params.names();
    let mut per_tensor = Vec::with_capacity(names.len());
    let mut entries = 0;
    let mut worst_entry = (String::new(), 0.0, 0.0);
    let mut worst_all: f64 = -1.0;
    for (ti, name) in names.iter().enumerate() {
        let len = params.tensors()[ti].len();
        let mut worst: f64 = 0.0;
        for i in 0..len {
            let orig = params.tensors()[ti].data[i];
            params.tensors_mut()[ti].data[i] = orig + h;
            let up = probe.loss(&params)?;
            params.tensors_mut()[ti].data[i] = orig - h;
            let down = probe.loss(&params)?;
            params.tensors_mut()[ti].data[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.tensors()[ti].data[i];
            let e = relative_error(a, numeric);
            if e > worst_all {
                worst_all = e;
                worst_entry = (format!("{name}[{i}]"), a, numeric);
            }
            worst = worst.max(e);
            entries += 1;
        }
        per_tensor.push((name.clone(), worst));
    }
    Ok(GradCheckReport {
        max_rel_error: per_tensor.iter().map(|(_, e)| *e).fold(0.0, f64::max),
        per_tensor,
        entries_checked: entries,
        worst: worst_entry,
    })
}
