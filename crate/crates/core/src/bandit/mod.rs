//! Finite-armed modal bandits: arms are valued by a score of their reward
//! density's mode rather than its mean.

mod regret;
mod top_m;
mod ucb;
mod uniform;

pub use regret::{regret_curve, regret_mode, regret_sample_mode, sample_regret_curve};
pub use top_m::{confidence_u, basel_tail, run_top_m, TopMOptions, TopMResult};
pub use ucb::{run_ucb, ucb_bonus, ucb_select};
pub use uniform::{run_uniform, UniformResult};

use serde::{Deserialize, Serialize};

use crate::env::{FiniteEnvironment, TrueMode};
use crate::error::{ModalError, Result};
use crate::knn::{distance, lex_cmp, SampleSet};
use crate::mode::{estimate_mode, estimate_p_modes, p_mode_value, ModeEstimate, ModeEstimatorConfig};

/// Per-arm bookkeeping: observed rewards and a cached mode estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmState {
    pub arm_id: usize,
    pub rewards: SampleSet<f64>,
    pub cached_mode: Option<ModeEstimate<f64>>,
    /// Pull count at which `cached_mode` was computed.
    pub cached_at: usize,
}

impl ArmState {
    pub fn new(arm_id: usize, dim: usize) -> Result<Self> {
        Ok(Self {
            arm_id,
            rewards: SampleSet::new(dim)?,
            cached_mode: None,
            cached_at: 0,
        })
    }

    pub fn pulls(&self) -> usize {
        self.rewards.len()
    }

    pub fn record(&mut self, reward: &[f64]) -> Result<()> {
        self.rewards.push(reward)
    }

    /// Mode estimate of the rewards so far, recomputed only after new pulls.
    /// With `p > 1` this is the p-mode: the smallest of the `p` highest modes.
    pub fn mode(&mut self, estimator: &ModeEstimatorConfig) -> Result<&ModeEstimate<f64>> {
        if self.cached_mode.is_none() || self.cached_at != self.pulls() {
            self.cached_mode = Some(sample_mode(&self.rewards, estimator)?);
            self.cached_at = self.pulls();
        }
        Ok(self.cached_mode.as_ref().expect("just filled"))
    }
}

/// [`estimate_mode`] for `p = 1`, otherwise the p-mode entry of
/// [`estimate_p_modes`].
pub fn sample_mode(samples: &SampleSet<f64>, estimator: &ModeEstimatorConfig) -> Result<ModeEstimate<f64>> {
    if estimator.p == 1 {
        return estimate_mode(samples, estimator);
    }
    let modes = estimate_p_modes(samples, estimator)?;
    let location = p_mode_value(&modes, estimator.p)?;
    Ok(modes
        .into_iter()
        .find(|m| m.location == location)
        .expect("p-mode is one of the modes"))
}

/// Number of forced initial pulls of every arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurnInPolicy {
    pub initial_pulls_per_arm: usize,
}

impl Default for BurnInPolicy {
    fn default() -> Self {
        Self {
            initial_pulls_per_arm: 10,
        }
    }
}

impl BurnInPolicy {
    pub fn new(n0: usize) -> Self {
        Self {
            initial_pulls_per_arm: n0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_pulls_per_arm == 0 {
            return Err(ModalError::param("burn-in needs at least one pull per arm"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreKind {
    /// The mode itself; one-dimensional rewards only.
    Identity,
    DistanceFromOrigin,
    NegatedDistance,
    /// Value of the nearest table point (ties to the earliest entry).
    Table { points: Vec<Vec<f64>>, values: Vec<f64> },
}

/// Map from a mode location to a value in `[0, 1]`:
/// `clamp(offset + scale · raw(x), 0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreFunction {
    #[serde(flatten)]
    pub kind: ScoreKind,
    #[serde(default = "unit")]
    pub scale: f64,
    #[serde(default)]
    pub offset: f64,
    /// Lipschitz constant of the whole map. Derived as `|scale|` for the
    /// built-in kinds; required for tables. Confidence radii are multiplied
    /// by it.
    #[serde(default)]
    pub lipschitz_constant: Option<f64>,
}

fn unit() -> f64 {
    1.0
}

impl Default for ScoreFunction {
    fn default() -> Self {
        Self::identity()
    }
}

impl ScoreFunction {
    fn of(kind: ScoreKind) -> Self {
        Self {
            kind,
            scale: 1.0,
            offset: 0.0,
            lipschitz_constant: None,
        }
    }

    pub fn identity() -> Self {
        Self::of(ScoreKind::Identity)
    }

    pub fn distance_from_origin() -> Self {
        Self::of(ScoreKind::DistanceFromOrigin)
    }

    pub fn negated_distance() -> Self {
        Self::of(ScoreKind::NegatedDistance)
    }

    pub fn table(points: Vec<Vec<f64>>, values: Vec<f64>, lipschitz_constant: f64) -> Self {
        Self {
            lipschitz_constant: Some(lipschitz_constant),
            ..Self::of(ScoreKind::Table { points, values })
        }
    }

    pub fn with_affine(mut self, scale: f64, offset: f64) -> Self {
        self.scale = scale;
        self.offset = offset;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.scale.is_finite() && self.offset.is_finite()) {
            return Err(ModalError::param("score scale and offset must be finite"));
        }
        match &self.kind {
            ScoreKind::Identity if dim != 1 => {
                return Err(ModalError::param(format!(
                    "identity score needs one-dimensional rewards, got D = {dim}"
                )))
            }
            ScoreKind::Table { points, values } => {
                if points.is_empty() || points.len() != values.len() {
                    return Err(ModalError::param("score table needs matching, nonempty points and values"));
                }
                if let Some(p) = points.iter().find(|p| p.len() != dim) {
                    return Err(ModalError::Shape { expected: dim, found: p.len() });
                }
                if self.lipschitz_constant.is_none() {
                    return Err(ModalError::param("a table score must declare its Lipschitz constant"));
                }
            }
            _ => {}
        }
        if let Some(l) = self.lipschitz_constant {
            if !(l > 0.0 && l.is_finite()) {
                return Err(ModalError::param("Lipschitz constant must be positive"));
            }
        }
        Ok(())
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz_constant.unwrap_or(self.scale.abs())
    }

    pub fn apply(&self, x: &[f64]) -> f64 {
        let norm = || x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let raw = match &self.kind {
            ScoreKind::Identity => x[0],
            ScoreKind::DistanceFromOrigin => norm(),
            ScoreKind::NegatedDistance => -norm(),
            ScoreKind::Table { points, values } => {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (i, p) in points.iter().enumerate() {
                    let d = distance(p.as_slice(), x);
                    if d < best_d {
                        best = i;
                        best_d = d;
                    }
                }
                values[best]
            }
        };
        (self.offset + self.scale * raw).clamp(0.0, 1.0)
    }
}

/// Settings shared by the finite-armed strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BanditConfig {
    /// Overall confidence parameter; UCB uses `δ/n` per step.
    pub delta: f64,
    pub score: ScoreFunction,
    pub burn_in: BurnInPolicy,
    /// Mode estimator applied to each arm's rewards; `k = auto` follows
    /// `default_k(T_i, D)` and grows with the pulls.
    pub estimator: ModeEstimatorConfig,
}

impl Default for BanditConfig {
    fn default() -> Self {
        Self {
            delta: 0.05,
            score: ScoreFunction::identity(),
            burn_in: BurnInPolicy::default(),
            estimator: ModeEstimatorConfig::default(),
        }
    }
}

impl BanditConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ModalError::param(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        self.score.validate(dim)?;
        self.burn_in.validate()?;
        self.estimator.validate()
    }
}

/// Full trace of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub strategy: String,
    pub seed: u64,
    /// `I_t` for `t = 1, …, n`, as arm ids.
    pub pull_sequence: Vec<usize>,
    pub reward_sequence: Vec<Vec<f64>>,
    /// `T_i(n)`.
    pub per_arm_counts: Vec<usize>,
    /// Final mode estimate of each arm; `None` for never-pulled arms.
    pub final_estimates: Vec<Option<Vec<f64>>>,
    pub config: serde_json::Value,
}

impl RunRecord {
    pub(crate) fn new(strategy: &str, seed: u64, num_arms: usize, config: serde_json::Value) -> Self {
        Self {
            strategy: strategy.to_owned(),
            seed,
            pull_sequence: Vec::new(),
            reward_sequence: Vec::new(),
            per_arm_counts: vec![0; num_arms],
            final_estimates: vec![None; num_arms],
            config,
        }
    }

    pub(crate) fn push(&mut self, arm: usize, reward: Vec<f64>) {
        self.pull_sequence.push(arm);
        self.reward_sequence.push(reward);
        self.per_arm_counts[arm] += 1;
    }

    pub(crate) fn finish(&mut self, states: &mut [ArmState], estimator: &ModeEstimatorConfig) -> Result<()> {
        for s in states.iter_mut() {
            if s.pulls() > 0 {
                self.final_estimates[s.arm_id] = Some(s.mode(estimator)?.location.clone());
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.pull_sequence.len()
    }

    /// Rewards observed from `arm`, in pull order.
    pub fn rewards_of(&self, arm: usize, dim: usize) -> Result<SampleSet<f64>> {
        SampleSet::from_points(
            dim,
            self.pull_sequence
                .iter()
                .zip(&self.reward_sequence)
                .filter(|(a, _)| **a == arm)
                .map(|(_, r)| r.as_slice()),
        )
    }

    /// Arm with the most pulls; ties go to the lowest id.
    pub fn most_pulled(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.per_arm_counts.iter().enumerate() {
            if c > self.per_arm_counts[best] {
                best = i;
            }
        }
        best
    }
}

/// True arm values `θ_i`, indexed by arm id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub thetas: Vec<f64>,
}

impl GapProfile {
    pub fn new(thetas: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() || thetas.iter().any(|t| !t.is_finite()) {
            return Err(ModalError::param("gap profile needs finite values for at least one arm"));
        }
        Ok(Self { thetas })
    }

    /// `θ_i = score(mode)` from each arm's analytic density, where the mode is
    /// the p-mode of the true mode list.
    pub fn from_environment(env: &FiniteEnvironment, score: &ScoreFunction, p: usize) -> Result<Self> {
        let modes = env.true_modes()?;
        Self::new(modes.iter().map(|m| score.apply(&true_p_mode(m, p))).collect())
    }

    pub fn best(&self) -> f64 {
        self.thetas.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Arm ids sorted by decreasing `θ`, ties by id.
    pub fn ranking(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.thetas.len()).collect();
        ids.sort_by(|&a, &b| self.thetas[b].total_cmp(&self.thetas[a]).then(a.cmp(&b)));
        ids
    }

    /// `Δ_i = θ_max − θ_i`, by arm id.
    pub fn deltas(&self) -> Vec<f64> {
        let best = self.best();
        self.thetas.iter().map(|t| best - t).collect()
    }

    /// The top-m gaps `Δ̃_i`: `θ_i − θ_(m+1)` for arms at or above the m-th
    /// value, `θ_(m) − θ_i` for the rest.
    pub fn m_deltas(&self, m: usize) -> Result<Vec<f64>> {
        if m == 0 || m >= self.thetas.len() {
            return Err(ModalError::param(format!("m must lie in 1..K-1, got {m}")));
        }
        let sorted: Vec<f64> = self.ranking().iter().map(|&i| self.thetas[i]).collect();
        let (theta_m, theta_next) = (sorted[m - 1], sorted[m]);
        Ok(self
            .thetas
            .iter()
            .map(|&t| if t >= theta_m { t - theta_next } else { theta_m - t })
            .collect())
    }
}

/// Smallest location among the first `p` true modes.
pub fn true_p_mode(modes: &[TrueMode], p: usize) -> Vec<f64> {
    modes[..p.clamp(1, modes.len())]
        .iter()
        .map(|m| &m.location)
        .min_by(|a, b| lex_cmp(a.as_slice(), b.as_slice()))
        .expect("at least one mode")
        .clone()
}

pub(crate) fn init_states(k: usize, dim: usize) -> Result<Vec<ArmState>> {
    (0..k).map(|i| ArmState::new(i, dim)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_profile_examples() {
        let g = GapProfile::new(vec![0.9, 0.6, 0.2]).unwrap();
        let md = g.m_deltas(2).unwrap();
        for (a, b) in md.iter().zip([0.7, 0.4, 0.4]) {
            assert!((a - b).abs() < 1e-12, "{md:?}");
        }
        assert_eq!(g.deltas()[0], 0.0);
        assert!(g.m_deltas(3).is_err());
        let shuffled = GapProfile::new(vec![0.2, 0.9, 0.6]).unwrap();
        assert_eq!(shuffled.ranking(), vec![1, 2, 0]);
    }

    #[test]
    fn score_functions() {
        assert_eq!(ScoreFunction::identity().apply(&[0.3]), 0.3);
        let d = ScoreFunction::distance_from_origin().with_affine(1.0 / 2f64.sqrt(), 0.0);
        assert!((d.apply(&[1.0, 1.0]) - 1.0).abs() < 1e-12);
        assert!((d.lipschitz() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let neg = ScoreFunction::negated_distance().with_affine(1.0, 1.0);
        assert!((neg.apply(&[0.6, 0.8]) - 0.0).abs() < 1e-12);
        assert_eq!(ScoreFunction::identity().with_affine(2.0, 0.0).apply(&[0.8]), 1.0);
        assert!(ScoreFunction::identity().validate(2).is_err());
        let t = ScoreFunction::table(vec![vec![0.0], vec![1.0]], vec![0.2, 0.9], 1.0);
        t.validate(1).unwrap();
        assert_eq!(t.apply(&[0.7]), 0.9);
        let mut untagged = t.clone();
        untagged.lipschitz_constant = None;
        assert!(untagged.validate(1).is_err());
    }

    #[test]
    fn score_serde_shape() {
        let s: ScoreFunction = serde_json::from_str(r#"{"kind":"distance_from_origin","scale":0.5}"#).unwrap();
        assert_eq!(s, ScoreFunction::distance_from_origin().with_affine(0.5, 0.0));
    }

    #[test]
    fn arm_state_cache() {
        let mut s = ArmState::new(0, 1).unwrap();
        for v in [0.1, 0.5, 0.52, 0.54, 0.9] {
            s.record(&[v]).unwrap();
        }
        let cfg = ModeEstimatorConfig::default().with_k(3);
        assert_eq!(s.mode(&cfg).unwrap().location, vec![0.52]);
        assert_eq!(s.cached_at, 5);
        s.record(&[0.91]).unwrap();
        assert_eq!(s.cached_at, 5);
        s.mode(&cfg).unwrap();
        assert_eq!(s.cached_at, 6);
    }
}
