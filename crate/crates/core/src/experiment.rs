//! Experiment configuration, read from and written to TOML.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bandit::{BanditConfig, BurnInPolicy, ScoreFunction, TopMOptions};
use crate::conditional::ConditionalModeConfig;
use crate::env::{catalogue, ArmDistribution, ContextualEnvironment, ContinuumEnvironment, FiniteEnvironment};
use crate::error::{ModalError, Result};
use crate::mode::ModeEstimatorConfig;
use crate::zooming::ZoomingConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Ucb,
    Uniform,
    TopM,
    ContextualUniform,
    Zooming,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Ucb => "ucb",
            Strategy::Uniform => "uniform",
            Strategy::TopM => "top_m",
            Strategy::ContextualUniform => "contextual_uniform",
            Strategy::Zooming => "zooming",
        }
    }
}

/// Where the rewards come from: a named preset's environment or an inline
/// description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    Preset { name: String },
    Finite { arms: Vec<ArmDistribution> },
    Contextual { context_dim: usize, arms: Vec<crate::env::LinearContextArm> },
    Continuum(ContinuumEnvironment),
}

/// A resolved environment.
#[derive(Debug, Clone, PartialEq)]
pub enum Environment {
    Finite(FiniteEnvironment),
    Contextual(ContextualEnvironment),
    Continuum(ContinuumEnvironment),
}

impl EnvironmentSpec {
    pub fn resolve(&self) -> Result<Environment> {
        match self {
            EnvironmentSpec::Preset { name } => catalogue::preset(name)?.environment.resolve(),
            EnvironmentSpec::Finite { arms } => Ok(Environment::Finite(FiniteEnvironment::new(arms.clone())?)),
            EnvironmentSpec::Contextual { context_dim, arms } => {
                let env = ContextualEnvironment {
                    context_dim: *context_dim,
                    arms: arms.clone(),
                };
                env.validate()?;
                Ok(Environment::Contextual(env))
            }
            EnvironmentSpec::Continuum(env) => {
                env.validate()?;
                Ok(Environment::Continuum(env.clone()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub count: usize,
    #[serde(default)]
    pub base: u64,
}

impl Seeds {
    pub fn iter(&self) -> impl Iterator<Item = u64> {
        let base = self.base;
        (0..self.count as u64).map(move |i| base.wrapping_add(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopMParams {
    pub m: usize,
    #[serde(default)]
    pub deterministic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextualParams {
    pub conditional: ConditionalModeConfig,
    /// Evenly spaced contexts per axis for the policy agreement report.
    pub eval_grid: usize,
    /// Grid contexts with a true gap below this are left out of the report.
    pub min_gap: f64,
}

impl Default for ContextualParams {
    fn default() -> Self {
        Self {
            conditional: ConditionalModeConfig::default(),
            eval_grid: 20,
            min_gap: 0.06,
        }
    }
}

impl ContextualParams {
    /// The evaluation grid: `eval_grid` evenly spaced values in `[0, 1]` per
    /// axis, in row-major order.
    pub fn grid(&self, context_dim: usize) -> Vec<Vec<f64>> {
        let g = self.eval_grid.max(2);
        let axis: Vec<f64> = (0..g).map(|i| i as f64 / (g - 1) as f64).collect();
        let mut points = vec![Vec::new()];
        for _ in 0..context_dim {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoomingParams {
    pub arms_per_phase: usize,
    pub phase_length: usize,
    pub initial_radius: f64,
    pub initial_center: Vec<f64>,
}

fn default_delta() -> f64 {
    0.05
}

fn default_checkpoints() -> usize {
    20
}

fn default_svg() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub strategy: Strategy,
    pub horizon: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Times at which the sample-mode regret is evaluated, evenly spaced.
    #[serde(default = "default_checkpoints")]
    pub regret_checkpoints: usize,
    #[serde(default = "default_svg")]
    pub svg: bool,
    pub seeds: Seeds,
    pub environment: EnvironmentSpec,
    #[serde(default)]
    pub score: ScoreFunction,
    #[serde(default)]
    pub burn_in: BurnInPolicy,
    #[serde(default)]
    pub estimator: ModeEstimatorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_m: Option<TopMParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contextual: Option<ContextualParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zooming: Option<ZoomingParams>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| ModalError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ModalError::Config(e.to_string()))
    }

    pub fn bandit(&self) -> BanditConfig {
        BanditConfig {
            delta: self.delta,
            score: self.score.clone(),
            burn_in: self.burn_in,
            estimator: self.estimator.clone(),
        }
    }

    pub fn top_m_options(&self) -> TopMOptions {
        TopMOptions {
            deterministic: self.top_m.as_ref().is_some_and(|t| t.deterministic),
        }
    }

    pub fn zooming_config(&self) -> Result<ZoomingConfig> {
        let z = self
            .zooming
            .as_ref()
            .ok_or_else(|| ModalError::param("strategy zooming needs a [zooming] table"))?;
        Ok(ZoomingConfig {
            arms_per_phase: z.arms_per_phase,
            phase_length: z.phase_length,
            initial_radius: z.initial_radius,
            initial_center: z.initial_center.clone(),
            horizon: self.horizon,
            delta: self.delta,
            burn_in: self.burn_in,
            estimator: self.estimator.clone(),
        })
    }

    /// Checks everything that can be checked without running: ranges, the
    /// environment, and that the strategy has its parameters and a matching
    /// environment kind.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.count == 0 {
            return Err(ModalError::param("seeds.count must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(ModalError::param("horizon must be positive"));
        }
        if self.regret_checkpoints == 0 {
            return Err(ModalError::param("regret_checkpoints must be positive"));
        }
        let env = self.environment.resolve()?;
        match (self.strategy, &env) {
            (Strategy::Ucb | Strategy::Uniform | Strategy::TopM, Environment::Finite(f)) => {
                use crate::env::RewardModel;
                self.bandit().validate(f.dimension())?;
                if self.strategy == Strategy::TopM {
                    let t = self
                        .top_m
                        .as_ref()
                        .ok_or_else(|| ModalError::param("strategy top_m needs a [top_m] table"))?;
                    if t.m == 0 || t.m >= f.num_arms() {
                        return Err(ModalError::param(format!("top_m.m must lie in 1..{}", f.num_arms() - 1)));
                    }
                }
                let n0 = self.burn_in.initial_pulls_per_arm;
                let needed = if self.strategy == Strategy::Uniform { f.num_arms() } else { f.num_arms() * n0 };
                if self.horizon < needed {
                    return Err(ModalError::param(format!("horizon {} is below the {needed} pulls burn-in needs", self.horizon)));
                }
                Ok(())
            }
            (Strategy::ContextualUniform, Environment::Contextual(c)) => {
                let params = self.contextual.clone().unwrap_or_default();
                params.conditional.validate()?;
                self.score.validate(1)?;
                if params.eval_grid < 2 {
                    return Err(ModalError::param("contextual.eval_grid must be at least 2"));
                }
                if self.horizon < c.num_arms() {
                    return Err(ModalError::param("horizon is below the number of arms"));
                }
                Ok(())
            }
            (Strategy::Zooming, Environment::Continuum(c)) => self.zooming_config()?.validate(c),
            (s, _) => Err(ModalError::param(format!(
                "strategy {} does not match the environment kind",
                s.name()
            ))),
        }
    }
}
