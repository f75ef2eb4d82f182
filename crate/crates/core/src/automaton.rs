//! Variable-structure stochastic learning automata.
//!
//! An automaton keeps a probability distribution over a finite action set,
//! samples one action per round and shifts mass according to the
//! environment's reinforcement. Two linear schemes are provided:
//! reward-inaction ([`lri_update`]) and reward-penalty ([`lrp_update`]).
//!
//! Reinforcement follows the convention that `beta = 1` is a full reward and
//! `beta = 0` is an unfavorable response.

use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance for the simplex invariant of a probability vector.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Post-update drift above which the vector is renormalized.
const DRIFT_TOLERANCE: f64 = 1e-12;

/// Probability distribution over the actions of one automaton.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionProbabilityVector(Vec<f64>);

impl ActionProbabilityVector {
    /// Validates `probs` against the simplex invariants.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("probability vector must have at least one action"));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {sum}, expected 1")));
        }
        Ok(Self(probs))
    }

    /// Unit vector concentrated on `action`.
    pub fn pure(actions: usize, action: usize) -> Result<Self> {
        if action >= actions {
            return Err(Error::invalid(format!("action {action} out of range for {actions} actions")));
        }
        let mut probs = vec![0.0; actions];
        probs[action] = 1.0;
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, action: usize) -> Option<f64> {
        self.0.get(action).copied()
    }

    /// Index of the most probable action; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn max_prob(&self) -> f64 {
        self.0[self.argmax()]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    fn check_action(&self, chosen: usize) -> Result<()> {
        if chosen >= self.0.len() {
            return Err(Error::invalid(format!(
                "chosen action {chosen} out of range for {} actions",
                self.0.len()
            )));
        }
        Ok(())
    }

    fn with_drift_repair(probs: Vec<f64>) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DRIFT_TOLERANCE {
            renormalize(probs)
        } else {
            Ok(Self(probs))
        }
    }
}

/// Environment response, normalized to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ReinforcementSignal(f64);

impl ReinforcementSignal {
    pub const REWARD: Self = Self(1.0);
    pub const NONE: Self = Self(0.0);

    pub fn new(beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::invalid(format!("reinforcement {beta} outside [0, 1]")));
        }
        Ok(Self(beta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Reinforcement scheme together with its step sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningParams {
    RewardInaction { lambda: f64 },
    RewardPenalty { reward: f64, penalty: f64 },
}

impl Default for LearningParams {
    fn default() -> Self {
        LearningParams::RewardInaction { lambda: 0.1 }
    }
}

impl LearningParams {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LearningParams::RewardInaction { lambda } => check_open_unit("lambda", lambda),
            LearningParams::RewardPenalty { reward, penalty } => {
                check_open_unit("reward step", reward)?;
                if !(0.0..1.0).contains(&penalty) {
                    return Err(Error::invalid(format!("penalty step {penalty} outside [0, 1)")));
                }
                Ok(())
            }
        }
    }

    /// Applies the configured scheme.
    pub fn update(
        &self,
        pv: &ActionProbabilityVector,
        chosen: usize,
        beta: ReinforcementSignal,
    ) -> Result<ActionProbabilityVector> {
        match *self {
            LearningParams::RewardInaction { lambda } => lri_update(pv, chosen, beta, lambda),
            LearningParams::RewardPenalty { reward, penalty } => {
                lrp_update(pv, chosen, beta, reward, penalty)
            }
        }
    }
}

fn check_open_unit(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} {value} outside (0, 1)")))
    }
}

/// Uniform distribution over `actions` actions.
pub fn init_uniform(actions: usize) -> Result<ActionProbabilityVector> {
    if actions == 0 {
        return Err(Error::invalid("automaton needs at least one action"));
    }
    Ok(ActionProbabilityVector(vec![1.0 / actions as f64; actions]))
}

/// Draws an action by inverting the cumulative distribution.
///
/// Indices are scanned in ascending order; any mass lost to rounding falls to
/// the last index.
pub fn sample_action<R: Rng + ?Sized>(pv: &ActionProbabilityVector, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (i, &p) in pv.0.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    pv.0.len() - 1
}

/// Linear reward-inaction update.
pub fn lri_update(
    pv: &ActionProbabilityVector,
    chosen: usize,
    beta: ReinforcementSignal,
    lambda: f64,
) -> Result<ActionProbabilityVector> {
    pv.check_action(chosen)?;
    check_open_unit("lambda", lambda)?;
    let step = lambda * beta.value();
    if step == 0.0 {
        return Ok(pv.clone());
    }
    let probs =
        pv.0.iter()
            .enumerate()
            .map(|(j, &p)| if j == chosen { p + step * (1.0 - p) } else { p - step * p })
            .collect();
    ActionProbabilityVector::with_drift_repair(probs)
}

/// Linear reward-penalty update. Requires at least two actions.
pub fn lrp_update(
    pv: &ActionProbabilityVector,
    chosen: usize,
    beta: ReinforcementSignal,
    reward: f64,
    penalty: f64,
) -> Result<ActionProbabilityVector> {
    let r = pv.len();
    if r < 2 {
        return Err(Error::invalid("reward-penalty scheme needs at least two actions"));
    }
    pv.check_action(chosen)?;
    LearningParams::RewardPenalty { reward, penalty }.validate()?;
    let b = beta.value();
    let gain = reward * b;
    let loss = penalty * (1.0 - b);
    // 1 - gain - loss is a convex weight, so the factored form stays non-negative.
    let keep = 1.0 - gain - loss;
    let spread = loss / (r - 1) as f64;
    let probs =
        pv.0.iter()
            .enumerate()
            .map(|(j, &p)| if j == chosen { p * keep + gain } else { p * keep + spread })
            .collect();
    ActionProbabilityVector::with_drift_repair(probs)
}

/// Divides every entry by the total, restoring an exact simplex.
pub fn renormalize(probs: Vec<f64>) -> Result<ActionProbabilityVector> {
    if probs.is_empty() {
        return Err(Error::invalid("cannot renormalize an empty vector"));
    }
    if let Some(p) = probs.iter().find(|p| p.is_nan() || **p < 0.0) {
        return Err(Error::NumericCorruption(format!("entry {p} is negative or NaN")));
    }
    let sum: f64 = probs.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) {
        return Err(Error::NumericCorruption(format!("probability mass {sum}")));
    }
    Ok(ActionProbabilityVector(probs.into_iter().map(|p| p / sum).collect()))
}
