use crate::net::NetParams;
use crate::scalar::Scalar;
use crate::NnError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 6.25e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1.5e-5,
        }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam<F> {
    pub cfg: AdamConfig,
    step: u64,
    m: NetParams<F>,
    v: NetParams<F>,
}

impl<F: Scalar> Adam<F> {
    pub fn new(cfg: AdamConfig, params: &NetParams<F>) -> Self {
        Self {
            cfg,
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Apply one update. Non-finite gradients are rejected before anything changes.
    pub fn step(&mut self, params: &mut NetParams<F>, grads: &NetParams<F>) -> Result<(), NnError> {
        if params.cfg != grads.cfg {
            return Err(NnError::Shape("gradient shapes differ from parameters".into()));
        }
        if !grads.is_finite() {
            return Err(NnError::NonFinite("gradients".into()));
        }
        self.step += 1;
        let c = self.cfg;
        let t = self.step as i32;
        let b1 = F::from_f64_lossy(c.beta1);
        let b2 = F::from_f64_lossy(c.beta2);
        let lr = F::from_f64_lossy(c.lr);
        let eps = F::from_f64_lossy(c.eps);
        let corr1 = F::from_f64_lossy(1.0 - c.beta1.powi(t));
        let corr2 = F::from_f64_lossy(1.0 - c.beta2.powi(t));
        let one = F::one();
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut().into_iter().zip(self.v.tensors_mut()));
        for ((p, g), (m, v)) in tensors {
            for (((p, &g), m), v) in p.data.iter_mut().zip(&g.data).zip(m.data.iter_mut()).zip(v.data.iter_mut()) {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let m_hat = *m / corr1;
                let v_hat = *v / corr2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        if !params.is_finite() {
            return Err(NnError::NonFinite("parameters after update".into()));
        }
        Ok(())
    }
}

/// Scale `grads` so their global L2 norm is at most `max_norm`; returns the norm
/// before scaling.
pub fn clip_grad_norm<F: Scalar>(grads: &mut NetParams<F>, max_norm: f64) -> f64 {
    let norm = grads
        .tensors()
        .iter()
        .map(|t| t.sum_squares().to_f64().unwrap_or(f64::INFINITY))
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm.is_finite() {
        let scale = F::from_f64_lossy(max_norm / norm);
        for t in grads.tensors_mut() {
            t.data.iter_mut().for_each(|x| *x *= scale);
        }
    }
    norm
}
