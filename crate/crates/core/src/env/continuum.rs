use serde::{Deserialize, Serialize};

use crate::error::{ModalError, Result};
use crate::rng::SimRng;

use super::arm::Base;

/// Mode of the reward distribution as a function of the arm location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Landscape {
    /// `peak − curvature · |a − center|²`.
    Quadratic { peak: f64, center: Vec<f64>, curvature: f64 },
    Constant { value: f64 },
}

/// Continuum of arms over the box `[lower, upper]`; pulling arm `a` yields a
/// `N(μ(a), sd²)` reward truncated to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuumEnvironment {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub landscape: Landscape,
    pub sd: f64,
}

impl ContinuumEnvironment {
    /// Arms in `[0, 1]` with `μ(a) = 0.9 − 0.8 (a − 0.7)²`, sd 0.05.
    pub fn quadratic() -> Self {
        Self {
            lower: vec![0.0],
            upper: vec![1.0],
            landscape: Landscape::Quadratic {
                peak: 0.9,
                center: vec![0.7],
                curvature: 0.8,
            },
            sd: 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.is_empty() || self.lower.len() != self.upper.len() {
            return Err(ModalError::Validation("arm box bounds must be nonempty and of equal length".into()));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l < u)) {
            return Err(ModalError::Validation("arm box needs lower < upper on every axis".into()));
        }
        if !(self.sd > 0.0) {
            return Err(ModalError::Validation("reward sd must be positive".into()));
        }
        if let Landscape::Quadratic { center, .. } = &self.landscape {
            if center.len() != self.lower.len() {
                return Err(ModalError::Shape {
                    expected: self.lower.len(),
                    found: center.len(),
                });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, a: &[f64]) -> bool {
        a.iter().zip(&self.lower).zip(&self.upper).all(|((x, l), u)| l <= x && x <= u)
    }

    /// Mode of the reward at arm `a`.
    pub fn mode_at(&self, a: &[f64]) -> f64 {
        let mu = match &self.landscape {
            Landscape::Quadratic { peak, center, curvature } => {
                peak - curvature * a.iter().zip(center).map(|(x, c)| (x - c).powi(2)).sum::<f64>()
            }
            Landscape::Constant { value } => *value,
        };
        mu.clamp(0.0, 1.0)
    }

    /// Maximizer of the mode function, when it is unique.
    pub fn optimum(&self) -> Option<Vec<f64>> {
        match &self.landscape {
            Landscape::Quadratic { center, .. } => Some(
                center
                    .iter()
                    .zip(&self.lower)
                    .zip(&self.upper)
                    .map(|((c, l), u)| c.clamp(*l, *u))
                    .collect(),
            ),
            Landscape::Constant { .. } => None,
        }
    }

    pub fn sample(&self, a: &[f64], rng: &mut SimRng) -> f64 {
        let mean = match &self.landscape {
            Landscape::Quadratic { peak, center, curvature } => {
                peak - curvature * a.iter().zip(center).map(|(x, c)| (x - c).powi(2)).sum::<f64>()
            }
            Landscape::Constant { value } => *value,
        };
        Base::TruncatedNormal { mean, sd: self.sd }.sample(rng)
    }
}
