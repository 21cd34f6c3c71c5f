//! Continuum-armed modal UCB by successive radius halving.
//!
//! Phase `j` samples `M` arms uniformly in `B(center_j, R₀ 2^{−j}) ∩ A`, runs
//! finite-arm modal UCB on them for `P` pulls and moves the center to the
//! arm with the highest UCB index. Pull histories do not carry over between
//! phases.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::{init_states, ucb_select, ArmState, BurnInPolicy, ScoreFunction};
use crate::env::ContinuumEnvironment;
use crate::error::{ModalError, Result};
use crate::knn::distance;
use crate::mode::ModeEstimatorConfig;
use crate::rng::{stream, SimRng, ARM_SAMPLING_STREAM};

/// Consecutive rejections tolerated before falling back to clamping.
pub const MAX_REJECTIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoomingConfig {
    /// Active arms per phase, `M`.
    pub arms_per_phase: usize,
    /// Pulls per phase, `P`.
    pub phase_length: usize,
    /// Initial radius `R₀`.
    pub initial_radius: f64,
    /// Initial center `A₀`.
    pub initial_center: Vec<f64>,
    pub horizon: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub burn_in: BurnInPolicy,
    #[serde(default)]
    pub estimator: ModeEstimatorConfig,
}

fn default_delta() -> f64 {
    0.05
}

impl ZoomingConfig {
    /// `M = 8`, `P = 800`, `R₀ = 1`, `n = 4800` around `center`, with 100
    /// burn-in pulls per arm so that every phase boundary compares arms on
    /// equal sample sizes. A wide `k = 75` keeps the per-arm mode estimates
    /// steady enough to rank arms whose modes differ by about 0.01.
    pub fn new(initial_center: Vec<f64>) -> Self {
        Self {
            arms_per_phase: 8,
            phase_length: 800,
            initial_radius: 1.0,
            initial_center,
            horizon: 4800,
            delta: 0.05,
            burn_in: BurnInPolicy::new(100),
            estimator: ModeEstimatorConfig::default().with_k(75),
        }
    }

    pub fn validate(&self, env: &ContinuumEnvironment) -> Result<()> {
        self.burn_in.validate()?;
        self.estimator.validate()?;
        if self.arms_per_phase < 2 {
            return Err(ModalError::param("zooming needs at least two arms per phase"));
        }
        let n0 = self.burn_in.initial_pulls_per_arm;
        if self.phase_length < self.arms_per_phase * n0 {
            return Err(ModalError::param(format!(
                "phase length {} is below M·N0 = {}",
                self.phase_length,
                self.arms_per_phase * n0
            )));
        }
        if !(self.initial_radius > 0.0 && self.initial_radius.is_finite()) {
            return Err(ModalError::param("initial radius must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ModalError::param(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.initial_center.len() != env.dim() {
            return Err(ModalError::Shape {
                expected: env.dim(),
                found: self.initial_center.len(),
            });
        }
        if !env.contains(&self.initial_center) {
            return Err(ModalError::param("initial center lies outside the arm space"));
        }
        if self.horizon < self.phase_length {
            return Err(ModalError::param(format!(
                "horizon {} is below the phase length {}",
                self.horizon, self.phase_length
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub phase: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    /// UCB-argmax at the end of the phase; the next phase's center.
    pub argmax: Vec<f64>,
    pub active_arms: Vec<Vec<f64>>,
    /// The ball barely met the arm space and samples were clamped instead.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoomingResult {
    /// UCB-argmax of the final active set.
    pub best_arm: Vec<f64>,
    pub phases: Vec<PhaseRecord>,
}

/// Uniform draw from `B(center, radius) ∩ box`, by rejection from the ball's
/// bounding cube. Returns `None` after [`MAX_REJECTIONS`] straight misses.
fn sample_in_ball(env: &ContinuumEnvironment, center: &[f64], radius: f64, rng: &mut SimRng) -> Option<Vec<f64>> {
    for _ in 0..MAX_REJECTIONS {
        let a: Vec<f64> = center.iter().map(|c| c + radius * (2.0 * rng.random::<f64>() - 1.0)).collect();
        if distance(&a, center) <= radius && env.contains(&a) {
            return Some(a);
        }
    }
    None
}

fn clamped_sample(env: &ContinuumEnvironment, center: &[f64], radius: f64, rng: &mut SimRng) -> Vec<f64> {
    loop {
        let a: Vec<f64> = center.iter().map(|c| c + radius * (2.0 * rng.random::<f64>() - 1.0)).collect();
        if distance(&a, center) <= radius {
            return a
                .iter()
                .zip(&env.lower)
                .zip(&env.upper)
                .map(|((x, l), u)| x.clamp(*l, *u))
                .collect();
        }
    }
}

pub fn run_zooming(env: &ContinuumEnvironment, config: &ZoomingConfig, seed: u64) -> Result<ZoomingResult> {
    env.validate()?;
    config.validate(env)?;
    let m = config.arms_per_phase;
    let phases = config.horizon / config.phase_length;
    let step_delta = config.delta / config.horizon as f64;
    let score = ScoreFunction::identity();
    let mut sampler = stream(seed, ARM_SAMPLING_STREAM);
    let mut center = config.initial_center.clone();
    let mut trace = Vec::with_capacity(phases);
    let mut best_arm = center.clone();
    for j in 0..phases {
        let radius = config.initial_radius / 2f64.powi(j as i32);
        let mut clamped = false;
        let mut arms = Vec::with_capacity(m);
        for _ in 0..m {
            let a = match sample_in_ball(env, &center, radius, &mut sampler) {
                Some(a) => a,
                None => {
                    if !clamped {
                        log::warn!("phase {j}: rejection sampling failed {MAX_REJECTIONS} times, clamping to the arm box");
                    }
                    clamped = true;
                    clamped_sample(env, &center, radius, &mut sampler)
                }
            };
            arms.push(a);
        }
        if !clamped {
            debug_assert!(arms.iter().all(|a| env.contains(a) && distance(a, &center) <= radius));
        }
        // The last phase absorbs the pulls left over by a horizon that is not
        // a multiple of the phase length.
        let pulls = if j + 1 == phases {
            config.horizon - j * config.phase_length
        } else {
            config.phase_length
        };
        let mut states = init_states(m, 1)?;
        let mut rngs: Vec<SimRng> = (0..m).map(|i| stream(seed, (j * m + i) as u64)).collect();
        for _ in 0..pulls {
            let i = ucb_select(&mut states, step_delta, &score, &config.burn_in, &config.estimator)?;
            let r = env.sample(&arms[i], &mut rngs[i]);
            states[i].record(&[r])?;
        }
        let top = argmax_index(&mut states, step_delta, &score, config)?;
        best_arm = arms[top].clone();
        trace.push(PhaseRecord {
            phase: j,
            center: center.clone(),
            radius,
            argmax: best_arm.clone(),
            active_arms: arms,
            clamped,
        });
        center = best_arm.clone();
    }
    Ok(ZoomingResult { best_arm, phases: trace })
}

fn argmax_index(states: &mut [ArmState], delta: f64, score: &ScoreFunction, config: &ZoomingConfig) -> Result<usize> {
    // Every arm has finished burn-in, so selection is the pure index argmax.
    ucb_select(states, delta, score, &BurnInPolicy::new(0), &config.estimator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Landscape;

    #[test]
    fn trace_shape_and_radii() {
        let env = ContinuumEnvironment::quadratic();
        let mut cfg = ZoomingConfig::new(vec![0.5]);
        cfg.horizon = 5000;
        let res = run_zooming(&env, &cfg, 1).unwrap();
        assert_eq!(res.phases.len(), 6);
        for (j, ph) in res.phases.iter().enumerate() {
            assert_eq!(ph.radius, 2f64.powi(-(j as i32)));
            assert_eq!(ph.active_arms.len(), 8);
            for a in &ph.active_arms {
                assert!(env.contains(a));
                assert!(distance(a, &ph.center) <= ph.radius);
            }
            if j > 0 {
                assert_eq!(ph.center, res.phases[j - 1].argmax);
            }
        }
        assert_eq!(res.best_arm, res.phases[5].argmax);
    }

    #[test]
    fn single_phase_and_flat_landscape() {
        let env = ContinuumEnvironment {
            landscape: Landscape::Constant { value: 0.5 },
            ..ContinuumEnvironment::quadratic()
        };
        let mut cfg = ZoomingConfig::new(vec![0.5]);
        cfg.horizon = 800;
        let res = run_zooming(&env, &cfg, 4).unwrap();
        assert_eq!(res.phases.len(), 1);
        assert!(res.phases[0].active_arms.contains(&res.best_arm));
    }

    #[test]
    fn config_checks() {
        let env = ContinuumEnvironment::quadratic();
        let base = ZoomingConfig::new(vec![0.5]);
        assert!(run_zooming(&env, &ZoomingConfig { arms_per_phase: 1, ..base.clone() }, 0).is_err());
        assert!(run_zooming(&env, &ZoomingConfig { phase_length: 799, ..base.clone() }, 0).is_err());
        assert!(run_zooming(&env, &ZoomingConfig { initial_center: vec![1.5], ..base.clone() }, 0).is_err());
        assert!(run_zooming(&env, &ZoomingConfig { horizon: 700, ..base.clone() }, 0).is_err());
        assert!(run_zooming(&env, &ZoomingConfig { initial_radius: 0.0, ..base }, 0).is_err());
    }

    #[test]
    fn clamping_fallback() {
        // A ball that only grazes the corner of the box.
        let env = ContinuumEnvironment {
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
            landscape: Landscape::Constant { value: 0.5 },
            sd: 0.05,
        };
        let mut rng = stream(0, 0);
        assert!(sample_in_ball(&env, &[1.0, 1.0], 1e-12, &mut rng).is_some());
        let far = clamped_sample(&env, &[2.0, 2.0], 0.5, &mut rng);
        assert!(env.contains(&far));
    }

    #[test]
    fn finds_the_peak() {
        let env = ContinuumEnvironment::quadratic();
        let cfg = ZoomingConfig::new(vec![0.5]);
        let hits = (0..20)
            .filter(|&s| (run_zooming(&env, &cfg, s).unwrap().best_arm[0] - 0.7).abs() <= 0.1)
            .count();
        assert!(hits >= 18, "{hits}");
    }
}
