//! Recurrent dueling Q-network: a ReLU fully connected layer, a stack of LSTM
//! layers, a dueling value/advantage head and an optional auxiliary head with three
//! logits per hand slot.
//!
//! Sequences are laid out time-major: row `t * batch + b` holds step `t` of
//! sequence `b`.

use rand::Rng;

use crate::scalar::{gemm, Scalar};
use crate::tensor::Tensor;
use crate::NnError;

pub const AUX_CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetConfig {
    pub input_dim: usize,
    pub hidden: usize,
    pub lstm_layers: usize,
    pub num_actions: usize,
    /// Hand slots predicted by the auxiliary head; 0 disables it.
    pub aux_slots: usize,
}

impl NetConfig {
    pub fn new(input_dim: usize, num_actions: usize, aux_slots: usize) -> Self {
        Self {
            input_dim,
            hidden: 512,
            lstm_layers: 2,
            num_actions,
            aux_slots,
        }
    }

    pub fn with_hidden(mut self, hidden: usize) -> Self {
        self.hidden = hidden;
        self
    }

    pub fn aux_outputs(&self) -> usize {
        self.aux_slots * AUX_CLASSES
    }
}

/// Affine map with weight `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<F> {
    pub w: Tensor<F>,
    pub b: Tensor<F>,
}

impl<F: Scalar> Linear<F> {
    fn zeros(out: usize, inp: usize) -> Self {
        Self {
            w: Tensor::zeros(&[out, inp]),
            b: Tensor::zeros(&[out]),
        }
    }

    fn out_dim(&self) -> usize {
        self.w.shape()[0]
    }

    fn in_dim(&self) -> usize {
        self.w.shape()[1]
    }

    /// `y = x·Wᵀ + b` for `rows` inputs.
    fn apply(&self, x: &[F], rows: usize, y: &mut [F]) {
        let (out, inp) = (self.out_dim(), self.in_dim());
        for r in 0..rows {
            y[r * out..(r + 1) * out].copy_from_slice(&self.b.data);
        }
        gemm(rows, inp, out, x, false, &self.w.data, true, F::one(), y);
    }

    /// Accumulate parameter gradients and optionally write `dx = dy·W`.
    fn backward(&self, x: &[F], dy: &[F], rows: usize, grad: &mut Linear<F>, dx: Option<(&mut [F], F)>) {
        let (out, inp) = (self.out_dim(), self.in_dim());
        gemm(out, rows, inp, dy, true, x, false, F::one(), &mut grad.w.data);
        for r in 0..rows {
            for (g, &d) in grad.b.data.iter_mut().zip(&dy[r * out..(r + 1) * out]) {
                *g += d;
            }
        }
        if let Some((dx, beta)) = dx {
            gemm(rows, out, inp, dy, false, &self.w.data, false, beta, dx);
        }
    }
}

/// One LSTM layer; gate blocks are ordered input, forget, cell, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<F> {
    pub w_ih: Tensor<F>,
    pub w_hh: Tensor<F>,
    pub b: Tensor<F>,
}

impl<F: Scalar> LstmParams<F> {
    fn zeros(inp: usize, hidden: usize) -> Self {
        Self {
            w_ih: Tensor::zeros(&[4 * hidden, inp]),
            w_hh: Tensor::zeros(&[4 * hidden, hidden]),
            b: Tensor::zeros(&[4 * hidden]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetParams<F> {
    pub cfg: NetConfig,
    pub fc: Linear<F>,
    pub lstm: Vec<LstmParams<F>>,
    pub value: Linear<F>,
    pub adv: Linear<F>,
    pub aux: Option<Linear<F>>,
}

/// Hidden and cell vectors per LSTM layer, each `batch × hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentState<F> {
    pub batch: usize,
    pub h: Vec<Vec<F>>,
    pub c: Vec<Vec<F>>,
}

impl<F: Scalar> RecurrentState<F> {
    pub fn zeros(cfg: &NetConfig, batch: usize) -> Self {
        let z = vec![F::zero(); batch * cfg.hidden];
        Self {
            batch,
            h: vec![z.clone(); cfg.lstm_layers],
            c: vec![z; cfg.lstm_layers],
        }
    }

    /// Copy of sequence `b` only.
    pub fn row(&self, b: usize) -> Self {
        let hidden = self.h[0].len() / self.batch;
        let pick = |v: &Vec<Vec<F>>| v.iter().map(|l| l[b * hidden..(b + 1) * hidden].to_vec()).collect();
        Self {
            batch: 1,
            h: pick(&self.h),
            c: pick(&self.c),
        }
    }

    /// Overwrite sequence `b` with a single-sequence state.
    pub fn set_row(&mut self, b: usize, src: &Self) {
        let hidden = self.h[0].len() / self.batch;
        for (dst, s) in self.h.iter_mut().zip(&src.h).chain(self.c.iter_mut().zip(&src.c)) {
            dst[b * hidden..(b + 1) * hidden].copy_from_slice(&s[..hidden]);
        }
    }

    /// Zero sequence `b`, as at an episode start.
    pub fn reset_row(&mut self, b: usize) {
        let hidden = self.h[0].len() / self.batch;
        for l in self.h.iter_mut().chain(self.c.iter_mut()) {
            l[b * hidden..(b + 1) * hidden].fill(F::zero());
        }
    }
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Tape<F> {
    steps: usize,
    batch: usize,
    x: Vec<F>,
    fc_out: Vec<F>,
    h0: Vec<Vec<F>>,
    c0: Vec<Vec<F>>,
    /// Per layer: outputs, cells and post-activation gates.
    hs: Vec<Vec<F>>,
    cs: Vec<Vec<F>>,
    gates: Vec<Vec<F>>,
}

#[derive(Debug, Clone)]
pub struct ForwardOutput<F> {
    pub steps: usize,
    pub batch: usize,
    /// `steps·batch × num_actions`.
    pub q: Vec<F>,
    /// `steps·batch × 3·aux_slots`, empty without the auxiliary head.
    pub aux: Vec<F>,
    pub state: RecurrentState<F>,
    pub tape: Option<Tape<F>>,
}

impl<F: Scalar> ForwardOutput<F> {
    pub fn q_row(&self, t: usize, b: usize) -> &[F] {
        let a = self.q.len() / (self.steps * self.batch);
        let r = t * self.batch + b;
        &self.q[r * a..(r + 1) * a]
    }
}

fn sigmoid<F: Scalar>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

impl<F: Scalar> NetParams<F> {
    pub fn zeros(cfg: NetConfig) -> Self {
        let h = cfg.hidden;
        let lstm = (0..cfg.lstm_layers).map(|_| LstmParams::zeros(h, h)).collect();
        Self {
            cfg,
            fc: Linear::zeros(h, cfg.input_dim),
            lstm,
            value: Linear::zeros(1, h),
            adv: Linear::zeros(cfg.num_actions, h),
            aux: (cfg.aux_slots > 0).then(|| Linear::zeros(cfg.aux_outputs(), h)),
        }
    }

    /// Uniform `±1/√fan_in` initialization of every weight and bias.
    pub fn init<R: Rng + ?Sized>(cfg: NetConfig, rng: &mut R) -> Self {
        let mut p = Self::zeros(cfg);
        // biases follow their weight matrix and share its fan-in
        let mut fan_in = cfg.input_dim;
        for t in p.tensors_mut() {
            if t.shape().len() == 2 {
                fan_in = t.shape()[1];
            }
            let bound = 1.0 / (fan_in as f64).sqrt();
            for x in t.data.iter_mut() {
                *x = F::from_f64_lossy(rng.gen_range(-bound..bound));
            }
        }
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.cfg)
    }

    pub fn names(&self) -> Vec<String> {
        let mut n = vec!["fc.w".to_string(), "fc.b".to_string()];
        for i in 0..self.lstm.len() {
            n.push(format!("lstm{i}.w_ih"));
            n.push(format!("lstm{i}.w_hh"));
            n.push(format!("lstm{i}.b"));
        }
        n.extend(["value.w", "value.b", "adv.w", "adv.b"].map(String::from));
        if self.aux.is_some() {
            n.extend(["aux.w", "aux.b"].map(String::from));
        }
        n
    }

    /// Every tensor, in the order of [`NetParams::names`].
    pub fn tensors(&self) -> Vec<&Tensor<F>> {
        let mut t = vec![&self.fc.w, &self.fc.b];
        for l in &self.lstm {
            t.extend([&l.w_ih, &l.w_hh, &l.b]);
        }
        t.extend([&self.value.w, &self.value.b, &self.adv.w, &self.adv.b]);
        if let Some(a) = &self.aux {
            t.extend([&a.w, &a.b]);
        }
        t
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<F>> {
        let mut t = vec![&mut self.fc.w, &mut self.fc.b];
        for l in &mut self.lstm {
            t.extend([&mut l.w_ih, &mut l.w_hh, &mut l.b]);
        }
        t.extend([&mut self.value.w, &mut self.value.b, &mut self.adv.w, &mut self.adv.b]);
        if let Some(a) = &mut self.aux {
            t.extend([&mut a.w, &mut a.b]);
        }
        t
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    pub fn cast<G: Scalar>(&self) -> NetParams<G> {
        let mut out = NetParams::<G>::zeros(self.cfg);
        for (dst, src) in out.tensors_mut().into_iter().zip(self.tensors()) {
            *dst = src.cast();
        }
        out
    }

    /// FNV-1a over the little-endian parameter bytes.
    pub fn checksum(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut buf = Vec::with_capacity(8);
        for t in self.tensors() {
            for &x in &t.data {
                buf.clear();
                x.write_le(&mut buf);
                for &byte in &buf {
                    hash ^= byte as u64;
                    hash = hash.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        hash
    }

    /// Run `steps × batch` observations through the network starting from `init`.
    /// With `record`, keeps the activations needed by [`NetParams::backward`].
    pub fn forward(
        &self,
        obs: &[F],
        steps: usize,
        batch: usize,
        init: &RecurrentState<F>,
        record: bool,
    ) -> Result<ForwardOutput<F>, NnError> {
        let cfg = &self.cfg;
        let (hd, rows) = (cfg.hidden, steps * batch);
        if obs.len() != rows * cfg.input_dim {
            return Err(NnError::Shape(format!(
                "observations hold {} values, expected {steps}×{batch}×{}",
                obs.len(),
                cfg.input_dim
            )));
        }
        if init.batch != batch || init.h.len() != cfg.lstm_layers || init.h.iter().any(|h| h.len() != batch * hd) {
            return Err(NnError::Shape("recurrent state does not match batch".into()));
        }

        let mut fc_out = vec![F::zero(); rows * hd];
        self.fc.apply(obs, rows, &mut fc_out);
        fc_out.iter_mut().for_each(|v| *v = v.max(F::zero()));

        let mut state = init.clone();
        let mut hs = Vec::with_capacity(cfg.lstm_layers);
        let mut cs = Vec::with_capacity(cfg.lstm_layers);
        let mut gates_all = Vec::with_capacity(cfg.lstm_layers);
        for (l, layer) in self.lstm.iter().enumerate() {
            let input = if l == 0 { &fc_out } else { &hs[l - 1] };
            let mut pre = vec![F::zero(); rows * 4 * hd];
            for r in 0..rows {
                pre[r * 4 * hd..(r + 1) * 4 * hd].copy_from_slice(&layer.b.data);
            }
            gemm(rows, hd, 4 * hd, input, false, &layer.w_ih.data, true, F::one(), &mut pre);
            let mut out_h = vec![F::zero(); rows * hd];
            let mut out_c = vec![F::zero(); rows * hd];
            let (h, c) = (&mut state.h[l], &mut state.c[l]);
            for t in 0..steps {
                let g = &mut pre[t * batch * 4 * hd..(t + 1) * batch * 4 * hd];
                gemm(batch, hd, 4 * hd, h, false, &layer.w_hh.data, true, F::one(), g);
                for b in 0..batch {
                    let gb = &mut g[b * 4 * hd..(b + 1) * 4 * hd];
                    let r = t * batch + b;
                    for j in 0..hd {
                        let i_g = sigmoid(gb[j]);
                        let f_g = sigmoid(gb[hd + j]);
                        let c_g = gb[2 * hd + j].tanh();
                        let o_g = sigmoid(gb[3 * hd + j]);
                        gb[j] = i_g;
                        gb[hd + j] = f_g;
                        gb[2 * hd + j] = c_g;
                        gb[3 * hd + j] = o_g;
                        let cell = f_g * c[b * hd + j] + i_g * c_g;
                        c[b * hd + j] = cell;
                        h[b * hd + j] = o_g * cell.tanh();
                        out_c[r * hd + j] = cell;
                        out_h[r * hd + j] = h[b * hd + j];
                    }
                }
            }
            hs.push(out_h);
            cs.push(out_c);
            gates_all.push(pre);
        }

        let top = hs.last().map(|v| v.as_slice()).unwrap_or(&fc_out);
        let a = cfg.num_actions;
        let mut value = vec![F::zero(); rows];
        self.value.apply(top, rows, &mut value);
        let mut q = vec![F::zero(); rows * a];
        self.adv.apply(top, rows, &mut q);
        let inv_a = F::one() / F::from_usize(a).expect("action count fits");
        for r in 0..rows {
            let row = &mut q[r * a..(r + 1) * a];
            let mean = row.iter().copied().sum::<F>() * inv_a;
            row.iter_mut().for_each(|x| *x = value[r] + *x - mean);
        }
        let mut aux = Vec::new();
        if let Some(head) = &self.aux {
            aux = vec![F::zero(); rows * cfg.aux_outputs()];
            head.apply(top, rows, &mut aux);
        }
        if !q.iter().chain(&aux).all(|x| x.is_finite()) {
            return Err(NnError::NonFinite("forward outputs".into()));
        }

        let tape = record.then(|| Tape {
            steps,
            batch,
            x: obs.to_vec(),
            fc_out,
            h0: init.h.clone(),
            c0: init.c.clone(),
            hs,
            cs,
            gates: gates_all,
        });
        Ok(ForwardOutput {
            steps,
            batch,
            q,
            aux,
            state,
            tape,
        })
    }

    /// Gradients of a scalar loss given `dq = ∂L/∂q` and `daux = ∂L/∂aux_logits`
    /// (same layouts as the forward outputs). The initial recurrent state is treated
    /// as a constant.
    pub fn backward(&self, out: &ForwardOutput<F>, dq: &[F], daux: Option<&[F]>) -> Result<NetParams<F>, NnError> {
        let tape = out.tape.as_ref().ok_or(NnError::NoTape)?;
        let cfg = &self.cfg;
        let (hd, steps, batch) = (cfg.hidden, tape.steps, tape.batch);
        let rows = steps * batch;
        let a = cfg.num_actions;
        if dq.len() != rows * a {
            return Err(NnError::Shape(format!("dq holds {} values, expected {}", dq.len(), rows * a)));
        }
        let mut grad = self.zeros_like();
        let top = tape.hs.last().unwrap_or(&tape.fc_out);

        // dueling combine: q = v + adv - mean(adv)
        let mut dv = vec![F::zero(); rows];
        let mut dadv = vec![F::zero(); rows * a];
        let inv_a = F::one() / F::from_usize(a).expect("action count fits");
        for r in 0..rows {
            let row = &dq[r * a..(r + 1) * a];
            let s: F = row.iter().copied().sum();
            dv[r] = s;
            let mean = s * inv_a;
            for (d, &g) in dadv[r * a..(r + 1) * a].iter_mut().zip(row) {
                *d = g - mean;
            }
        }
        let mut dtop = vec![F::zero(); rows * hd];
        self.adv.backward(top, &dadv, rows, &mut grad.adv, Some((&mut dtop, F::zero())));
        self.value.backward(top, &dv, rows, &mut grad.value, Some((&mut dtop, F::one())));
        match (&self.aux, daux) {
            (Some(head), Some(d)) => {
                if d.len() != rows * cfg.aux_outputs() {
                    return Err(NnError::Shape("daux length".into()));
                }
                let g = grad.aux.as_mut().expect("aux grads mirror params");
                head.backward(top, d, rows, g, Some((&mut dtop, F::one())));
            }
            (None, Some(_)) => return Err(NnError::Shape("network has no auxiliary head".into())),
            _ => {}
        }

        let mut dh_out = dtop;
        for l in (0..self.lstm.len()).rev() {
            let layer = &self.lstm[l];
            let input = if l == 0 { &tape.fc_out } else { &tape.hs[l - 1] };
            let (hs, cs, gates) = (&tape.hs[l], &tape.cs[l], &tape.gates[l]);
            let mut dgates = vec![F::zero(); rows * 4 * hd];
            let mut dh_next = vec![F::zero(); batch * hd];
            let mut dc_next = vec![F::zero(); batch * hd];
            let one = F::one();
            for t in (0..steps).rev() {
                for b in 0..batch {
                    let r = t * batch + b;
                    let g = &gates[r * 4 * hd..(r + 1) * 4 * hd];
                    let dg = &mut dgates[r * 4 * hd..(r + 1) * 4 * hd];
                    for j in 0..hd {
                        let (i_g, f_g, c_g, o_g) = (g[j], g[hd + j], g[2 * hd + j], g[3 * hd + j]);
                        let cell = cs[r * hd + j];
                        let tc = cell.tanh();
                        let c_prev = if t == 0 { tape.c0[l][b * hd + j] } else { cs[(r - batch) * hd + j] };
                        let dh = dh_out[r * hd + j] + dh_next[b * hd + j];
                        let dc = dc_next[b * hd + j] + dh * o_g * (one - tc * tc);
                        dc_next[b * hd + j] = dc * f_g;
                        dg[j] = dc * c_g * i_g * (one - i_g);
                        dg[hd + j] = dc * c_prev * f_g * (one - f_g);
                        dg[2 * hd + j] = dc * i_g * (one - c_g * c_g);
                        dg[3 * hd + j] = dh * tc * o_g * (one - o_g);
                    }
                }
                let dg_t = &dgates[t * batch * 4 * hd..(t + 1) * batch * 4 * hd];
                gemm(batch, 4 * hd, hd, dg_t, false, &layer.w_hh.data, false, F::zero(), &mut dh_next);
            }
            // previous hidden states: the initial state, then outputs shifted by one step
            let mut h_prev = Vec::with_capacity(rows * hd);
            h_prev.extend_from_slice(&tape.h0[l]);
            h_prev.extend_from_slice(&hs[..(rows - batch) * hd]);
            let gl = &mut grad.lstm[l];
            gemm(4 * hd, rows, hd, &dgates, true, &h_prev, false, F::one(), &mut gl.w_hh.data);
            gemm(4 * hd, rows, hd, &dgates, true, input, false, F::one(), &mut gl.w_ih.data);
            for r in 0..rows {
                for (acc, &d) in gl.b.data.iter_mut().zip(&dgates[r * 4 * hd..(r + 1) * 4 * hd]) {
                    *acc += d;
                }
            }
            let mut dx = vec![F::zero(); rows * hd];
            gemm(rows, 4 * hd, hd, &dgates, false, &layer.w_ih.data, false, F::zero(), &mut dx);
            dh_out = dx;
        }

        // ReLU then the first affine layer
        for (d, &y) in dh_out.iter_mut().zip(&tape.fc_out) {
            if y <= F::zero() {
                *d = F::zero();
            }
        }
        self.fc.backward(&tape.x, &dh_out, rows, &mut grad.fc, None);
        if !grad.is_finite() {
            return Err(NnError::NonFinite("gradients".into()));
        }
        Ok(grad)
    }
}
