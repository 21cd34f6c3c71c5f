use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ModalError, Result};
use crate::rng::SimRng;

use super::arm::Base;

/// Rewards `N(intercept + slopes·x, sd²)` truncated to `[0, 1]`, so the
/// conditional mode at `x` is the linear predictor clamped into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearContextArm {
    pub intercept: f64,
    pub slopes: Vec<f64>,
    pub sd: f64,
}

impl LinearContextArm {
    pub fn conditional_mode(&self, x: &[f64]) -> f64 {
        let mean = self.intercept + self.slopes.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        mean.clamp(0.0, 1.0)
    }
}

/// Contexts drawn uniformly from `[0, 1]^d`, one linear-mode arm per action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextualEnvironment {
    pub context_dim: usize,
    pub arms: Vec<LinearContextArm>,
}

impl ContextualEnvironment {
    /// Two arms with conditional modes `0.2 + 0.6x` and `0.8 − 0.6x`,
    /// crossing at `x = 0.5`.
    pub fn crossing() -> Self {
        Self {
            context_dim: 1,
            arms: vec![
                LinearContextArm {
                    intercept: 0.2,
                    slopes: vec![0.6],
                    sd: 0.05,
                },
                LinearContextArm {
                    intercept: 0.8,
                    slopes: vec![-0.6],
                    sd: 0.05,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.context_dim == 0 || self.arms.is_empty() {
            return Err(ModalError::Validation("contextual environment needs arms and context dimension ≥ 1".into()));
        }
        for arm in &self.arms {
            if arm.slopes.len() != self.context_dim {
                return Err(ModalError::Shape {
                    expected: self.context_dim,
                    found: arm.slopes.len(),
                });
            }
            if !(arm.sd > 0.0) {
                return Err(ModalError::Validation("arm sd must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn sample_context(&self, rng: &mut SimRng) -> Vec<f64> {
        (0..self.context_dim).map(|_| rng.random::<f64>()).collect()
    }

    pub fn sample(&self, arm: usize, x: &[f64], rng: &mut SimRng) -> f64 {
        let a = &self.arms[arm];
        let mean = a.intercept + a.slopes.iter().zip(x).map(|(s, v)| s * v).sum::<f64>();
        Base::TruncatedNormal { mean, sd: a.sd }.sample(rng)
    }

    /// The arm with the highest conditional mode at `x`; ties go to the
    /// lowest id.
    pub fn optimal_arm(&self, x: &[f64]) -> usize {
        let mut best = 0;
        for (i, a) in self.arms.iter().enumerate() {
            if a.conditional_mode(x) > self.arms[best].conditional_mode(x) {
                best = i;
            }
        }
        best
    }

    /// Difference between the best and second-best conditional modes at `x`.
    pub fn gap(&self, x: &[f64]) -> f64 {
        let mut modes: Vec<f64> = self.arms.iter().map(|a| a.conditional_mode(x)).collect();
        modes.sort_by(|a, b| b.total_cmp(a));
        modes.get(1).map_or(f64::INFINITY, |second| modes[0] - second)
    }
}
