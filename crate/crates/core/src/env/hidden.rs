use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ModalError, Result};
use crate::rng::seeded;

use super::arm::Base;

/// Probability of the first hidden context as a function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    Constant { p: f64 },
    /// `before` for `t ≤ at`, `after` afterwards.
    Step { before: f64, after: f64, at: usize },
}

impl Schedule {
    pub fn probability(&self, t: usize) -> f64 {
        match *self {
            Schedule::Constant { p } => p,
            Schedule::Step { before, after, at } => {
                if t <= at {
                    before
                } else {
                    after
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        let valid = match *self {
            Schedule::Constant { p } => ok(p),
            Schedule::Step { before, after, .. } => ok(before) && ok(after),
        };
        if valid {
            Ok(())
        } else {
            Err(ModalError::Validation("schedule probabilities must lie in [0, 1]".into()))
        }
    }
}

/// Two hidden contexts with rewards `N(μ_H, σ²)`; which context is active
/// at time `t` is drawn with a time-varying probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HiddenContextSpec {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma: f64,
    pub schedule: Schedule,
}

impl HiddenContextSpec {
    pub fn validate(&self) -> Result<()> {
        if self.mu1 == self.mu2 {
            return Err(ModalError::Validation("mu1 and mu2 must differ".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(ModalError::Validation("sigma must be positive".into()));
        }
        if ![self.mu1, self.mu2].iter().all(|m| (0.0..=1.0).contains(m)) {
            return Err(ModalError::Validation("context means must lie in [0, 1]".into()));
        }
        self.schedule.validate()
    }
}

/// Rewards for `t = 1, …, t_max`, each truncated to `[0, 1]`.
///
/// The mean of the stream follows the schedule, while its modes stay at
/// `μ₁` and `μ₂` throughout.
pub fn hidden_context_stream(spec: &HiddenContextSpec, t_max: usize, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = seeded(seed);
    Ok((1..=t_max)
        .map(|t| {
            let mu = if rng.random::<f64>() < spec.schedule.probability(t) {
                spec.mu1
            } else {
                spec.mu2
            };
            Base::TruncatedNormal { mean: mu, sd: spec.sigma }.sample(&mut rng)
        })
        .collect())
}
