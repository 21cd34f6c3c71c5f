//! Synthetic reward environments with analytically known modes.

mod arm;
pub mod catalogue;
mod continuum;
mod contextual;
mod hidden;
mod modes;

pub use arm::{ks_distance, ArmDistribution, Base, Component, ContaminationModel};
pub use catalogue::{figure_environments, preset, PRESET_NAMES};
pub use contextual::{ContextualEnvironment, LinearContextArm};
pub use continuum::{ContinuumEnvironment, Landscape};
pub use hidden::{hidden_context_stream, HiddenContextSpec, Schedule};
pub use modes::{contaminated_top_mode, density_modes, true_modes, TrueMode, GRID_STEP, PLATEAU_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{ModalError, Result};
use crate::knn::SampleSet;
use crate::rng::{stream, SimRng};

/// A finite-armed environment the bandit strategies can pull from.
pub trait RewardModel: Send + Sync {
    fn num_arms(&self) -> usize;
    fn dimension(&self) -> usize;
    fn sample(&self, arm: usize, rng: &mut SimRng) -> Vec<f64>;
}

/// One independent generator per arm, so the j-th draw of an arm is the same
/// whatever the interleaving of pulls.
pub struct ArmStreams<'a, E: ?Sized> {
    env: &'a E,
    rngs: Vec<SimRng>,
}

impl<'a, E: RewardModel + ?Sized> ArmStreams<'a, E> {
    pub fn new(env: &'a E, seed: u64) -> Self {
        let rngs = (0..env.num_arms()).map(|i| stream(seed, i as u64)).collect();
        Self { env, rngs }
    }

    pub fn draw(&mut self, arm: usize) -> Vec<f64> {
        self.env.sample(arm, &mut self.rngs[arm])
    }
}

/// The first `n` draws of every arm's stream under `seed`: the rewards each
/// arm would have produced had it been pulled at every step.
pub fn counterfactual_streams<E: RewardModel + ?Sized>(env: &E, seed: u64, n: usize) -> Result<Vec<SampleSet<f64>>> {
    let mut streams = ArmStreams::new(env, seed);
    (0..env.num_arms())
        .map(|arm| SampleSet::from_points(env.dimension(), (0..n).map(|_| streams.draw(arm))))
        .collect()
}

/// Arms given by explicit densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteEnvironment {
    pub arms: Vec<ArmDistribution>,
}

impl FiniteEnvironment {
    pub fn new(arms: Vec<ArmDistribution>) -> Result<Self> {
        let env = Self { arms };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .arms
            .first()
            .ok_or_else(|| ModalError::Validation("environment needs at least one arm".into()))?;
        for arm in &self.arms {
            arm.validate()?;
            if arm.dimension() != first.dimension() {
                return Err(ModalError::Shape {
                    expected: first.dimension(),
                    found: arm.dimension(),
                });
            }
        }
        Ok(())
    }

    /// Every arm's true modes, highest first.
    pub fn true_modes(&self) -> Result<Vec<Vec<TrueMode>>> {
        self.arms.iter().map(true_modes).collect()
    }
}

impl RewardModel for FiniteEnvironment {
    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn dimension(&self) -> usize {
        self.arms[0].dimension()
    }

    fn sample(&self, arm: usize, rng: &mut SimRng) -> Vec<f64> {
        self.arms[arm].sample(rng)
    }
}
