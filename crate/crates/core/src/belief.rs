//! Exact Bayesian beliefs over enumerable sets of histories.
//!
//! An observer holds a belief `B(tau)` over the joint histories consistent with its
//! own view. When a teammate acts, the belief is conditioned on that action using the
//! teammate's policy evaluated on the teammate's view of each candidate history.
//!
//! Under an epsilon-greedy teammate the posterior splits into two parts: a filtered
//! part that keeps only histories whose greedy action matches what was seen, and a
//! prior-proportional leak of mass `epsilon/|U| / Z` that carries no information.
//! Observing the greedy action itself removes the leak entirely.

use thiserror::Error;

const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("observed action has zero probability under every history in the support")]
    ImpossibleEvidence,
    #[error("invalid belief: {0}")]
    Invalid(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
}

/// Probability table over distinct candidate histories.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefDistribution<H> {
    support: Vec<H>,
    probs: Vec<f64>,
}

impl<H: PartialEq + Clone> BeliefDistribution<H> {
    pub fn new(support: Vec<H>, probs: Vec<f64>) -> Result<Self, BeliefError> {
        if support.len() != probs.len() {
            return Err(BeliefError::Invalid(format!(
                "{} histories but {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        if support.is_empty() {
            return Err(BeliefError::Invalid("empty support".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(BeliefError::Invalid("probabilities must be finite and >= 0".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(BeliefError::Invalid(format!("probabilities sum to {total}")));
        }
        for (i, h) in support.iter().enumerate() {
            if support[..i].contains(h) {
                return Err(BeliefError::Invalid("support entries must be distinct".into()));
            }
        }
        Ok(Self { support, probs })
    }

    pub fn uniform(support: Vec<H>) -> Result<Self, BeliefError> {
        let n = support.len();
        Self::new(support, vec![1.0 / n.max(1) as f64; n])
    }

    /// Normalize nonnegative weights.
    pub fn from_weights(support: Vec<H>, weights: Vec<f64>) -> Result<Self, BeliefError> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(BeliefError::ImpossibleEvidence);
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Self::new(support, probs)
    }

    pub fn support(&self) -> &[H] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_of(&self, h: &H) -> f64 {
        self.support
            .iter()
            .position(|x| x == h)
            .map_or(0.0, |i| self.probs[i])
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Total variation distance to a belief over the same support order.
    pub fn total_variation(&self, other: &Self) -> f64 {
        debug_assert!(self.support == other.support);
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Epsilon-greedy policy `pi(u | v) = (1 - eps) * I(u*(v) = u) + eps / |U|`.
#[derive(Debug, Clone)]
pub struct EpsGreedyPolicy<G> {
    greedy: G,
    epsilon: f64,
    num_actions: usize,
}

impl<G> EpsGreedyPolicy<G> {
    pub fn new(greedy: G, epsilon: f64, num_actions: usize) -> Result<Self, BeliefError> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(BeliefError::InvalidPolicy(format!("epsilon {epsilon} outside [0, 1]")));
        }
        if num_actions == 0 {
            return Err(BeliefError::InvalidPolicy("no actions".into()));
        }
        Ok(Self {
            greedy,
            epsilon,
            num_actions,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn greedy_action<V>(&self, view: &V) -> usize
    where
        G: Fn(&V) -> usize,
    {
        (self.greedy)(view)
    }

    pub fn prob<V>(&self, view: &V, action: usize) -> f64
    where
        G: Fn(&V) -> usize,
    {
        let hit = if self.greedy_action(view) == action { 1.0 } else { 0.0 };
        (1.0 - self.epsilon) * hit + self.epsilon / self.num_actions as f64
    }
}

/// Posterior over histories after the teammate is seen to take `observed_action`.
///
/// `teammate_view` maps a joint history to what the teammate conditioned on.
pub fn bayes_update<H, V, G, O>(
    prior: &BeliefDistribution<H>,
    policy: &EpsGreedyPolicy<G>,
    observed_action: usize,
    teammate_view: O,
) -> Result<BeliefDistribution<H>, BeliefError>
where
    H: PartialEq + Clone,
    G: Fn(&V) -> usize,
    O: Fn(&H) -> V,
{
    let weights: Vec<f64> = prior
        .support
        .iter()
        .zip(&prior.probs)
        .map(|(h, p)| policy.prob(&teammate_view(h), observed_action) * p)
        .collect();
    BeliefDistribution::from_weights(prior.support.clone(), weights)
}

/// Posterior after observing the teammate's greedy action directly.
pub fn sad_update<H, F>(
    prior: &BeliefDistribution<H>,
    greedy_map: F,
    observed_greedy: usize,
) -> Result<BeliefDistribution<H>, BeliefError>
where
    H: PartialEq + Clone,
    F: Fn(&H) -> usize,
{
    let weights: Vec<f64> = prior
        .support
        .iter()
        .zip(&prior.probs)
        .map(|(h, p)| if greedy_map(h) == observed_greedy { *p } else { 0.0 })
        .collect();
    BeliefDistribution::from_weights(prior.support.clone(), weights)
}

/// Epsilon-greedy posterior split into its leak and filtered parts.
#[derive(Debug, Clone)]
pub struct BlurReport<H> {
    pub posterior: BeliefDistribution<H>,
    /// Prior-proportional term, `(eps/|U|) B(tau) / Z`.
    pub leak: Vec<f64>,
    /// Greedy-consistent term, `(1 - eps) I(u*(tau) = u) B(tau) / Z`.
    pub filtered: Vec<f64>,
    /// Total mass of the leak term.
    pub unfiltered_mass: f64,
}

pub fn blur_report<H, V, G, O>(
    prior: &BeliefDistribution<H>,
    policy: &EpsGreedyPolicy<G>,
    observed_action: usize,
    teammate_view: O,
) -> Result<BlurReport<H>, BeliefError>
where
    H: PartialEq + Clone,
    G: Fn(&V) -> usize,
    O: Fn(&H) -> V,
{
    let eps = policy.epsilon;
    let uniform = eps / policy.num_actions as f64;
    let consistent: Vec<bool> = prior
        .support
        .iter()
        .map(|h| policy.greedy_action(&teammate_view(h)) == observed_action)
        .collect();
    let matched_mass: f64 = prior
        .probs
        .iter()
        .zip(&consistent)
        .filter(|(_, &c)| c)
        .map(|(p, _)| p)
        .sum();
    let z = uniform + (1.0 - eps) * matched_mass;
    if !(z > 0.0) {
        return Err(BeliefError::ImpossibleEvidence);
    }
    let leak: Vec<f64> = prior.probs.iter().map(|p| uniform * p / z).collect();
    let filtered: Vec<f64> = prior
        .probs
        .iter()
        .zip(&consistent)
        .map(|(p, &c)| if c { (1.0 - eps) * p / z } else { 0.0 })
        .collect();
    let unfiltered_mass = uniform / z;
    let posterior = bayes_update(prior, policy, observed_action, teammate_view)?;
    Ok(BlurReport {
        posterior,
        leak,
        filtered,
        unfiltered_mass,
    })
}

/// One row of an epsilon sweep on the matrix game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub unfiltered_mass: f64,
    /// Total variation between the epsilon posterior and the greedy-observation posterior.
    pub blur_tv: f64,
    /// Posterior probability of the true card.
    pub true_card_posterior: f64,
}

/// Player 2's belief over player 1's card after seeing player 1 act with a
/// card-revealing greedy policy (card 1 -> action 1, card 2 -> action 3), for
/// `epsilon` in `0, 1/steps, ..., 1`.
pub fn matrix_game_sweep(steps: usize) -> Vec<SweepRow> {
    let greedy = |card: &usize| if *card == 0 { 0 } else { 2 };
    let prior = BeliefDistribution::uniform(vec![0usize, 1]).expect("two cards");
    let true_card = 0usize;
    let observed = greedy(&true_card);
    let sharp = sad_update(&prior, greedy, observed).expect("greedy action is consistent");
    (0..=steps)
        .map(|i| {
            let epsilon = i as f64 / steps as f64;
            let policy = EpsGreedyPolicy::new(greedy, epsilon, 3).expect("epsilon in range");
            let report =
                blur_report(&prior, &policy, observed, |c: &usize| *c).expect("positive evidence");
            SweepRow {
                epsilon,
                unfiltered_mass: report.unfiltered_mass,
                blur_tv: report.posterior.total_variation(&sharp),
                true_card_posterior: report.posterior.prob_of(&true_card),
            }
        })
        .collect()
}
