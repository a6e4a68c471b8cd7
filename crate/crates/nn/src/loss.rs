use crate::scalar::Scalar;

/// Softmax cross entropy of `logits` against class `target`; writes
/// `∂loss/∂logits` into `grad`.
pub fn softmax_cross_entropy<F: Scalar>(logits: &[F], target: usize, grad: &mut [F]) -> F {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let mut z = F::zero();
    for (g, &l) in grad.iter_mut().zip(logits) {
        *g = (l - max).exp();
        z += *g;
    }
    for g in grad.iter_mut() {
        *g = *g / z;
    }
    let loss = z.ln() + max - logits[target];
    grad[target] -= F::one();
    loss
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_cost_ln3() {
        let mut g = [0.0; 3];
        let l = softmax_cross_entropy(&[0.4f64, 0.4, 0.4], 1, &mut g);
        assert!((l - 3f64.ln()).abs() < 1e-15);
        assert!((g[1] + 2.0 / 3.0).abs() < 1e-15);
        assert!((g[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn saturated_correct_logit_is_nearly_free() {
        let mut g = [0.0; 3];
        let l = softmax_cross_entropy(&[40.0f64, 0.0, 0.0], 0, &mut g);
        assert!(l < 1e-6 && l >= 0.0);
        let big = softmax_cross_entropy(&[1e4f32, 0.0, 0.0], 1, &mut [0.0; 3]);
        assert!(big.is_finite());
    }

    #[test]
    fn gradient_matches_differences() {
        let logits = [0.3f64, -1.2, 2.0];
        let mut g = [0.0; 3];
        softmax_cross_entropy(&logits, 2, &mut g);
        for i in 0..3 {
            let (mut up, mut dn) = (logits, logits);
            up[i] += 1e-6;
            dn[i] -= 1e-6;
            let num = (softmax_cross_entropy(&up, 2, &mut [0.0; 3]) - softmax_cross_entropy(&dn, 2, &mut [0.0; 3])) / 2e-6;
            assert!((num - g[i]).abs() < 1e-8);
        }
    }
}
