use rand::Rng;
use sad_nn::Scalar;

use crate::TrainError;

/// Highest-valued legal action, lowest id on ties; `None` when nothing is legal.
pub fn masked_argmax<F: Scalar>(q: &[F], legal: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, F)> = None;
    for (i, (&v, &ok)) in q.iter().zip(legal).enumerate() {
        if ok && best.map_or(true, |(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Epsilon-greedy choice. Returns `(executed, greedy)`: the executed action is the
/// greedy one with probability `1 - epsilon`, otherwise uniform over legal actions
/// (the greedy action included).
pub fn act<F: Scalar, R: Rng + ?Sized>(
    q: &[F],
    legal: &[bool],
    epsilon: f64,
    rng: &mut R,
) -> Result<(usize, usize), TrainError> {
    let greedy = masked_argmax(q, legal).ok_or(TrainError::NoLegalAction)?;
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        let n = legal.iter().filter(|&&l| l).count();
        let pick = rng.gen_range(0..n);
        let id = legal
            .iter()
            .enumerate()
            .filter(|(_, &l)| l)
            .nth(pick)
            .map(|(i, _)| i)
            .expect("pick below legal count");
        return Ok((id, greedy));
    }
    Ok((greedy, greedy))
}
