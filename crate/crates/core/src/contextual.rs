//! Contextual modal bandits: round-robin exploration that stores every
//! (reward, context) pair, then a policy that picks the arm whose estimated
//! conditional mode scores highest at the queried context.

use serde::{Deserialize, Serialize};

use crate::bandit::{RunRecord, ScoreFunction};
use crate::conditional::{conditional_mode, ConditionalModeConfig, JointSampleSet};
use crate::env::ContextualEnvironment;
use crate::error::{ModalError, Result};
use crate::rng::{stream, CONTEXT_STREAM};

#[derive(Debug, Clone, PartialEq)]
pub struct ContextualPolicy {
    /// One joint sample per arm, rows `(reward, context)`.
    pub arms: Vec<JointSampleSet<f64>>,
    pub config: ConditionalModeConfig,
    pub score: ScoreFunction,
}

impl ContextualPolicy {
    pub fn new(arms: Vec<JointSampleSet<f64>>, config: ConditionalModeConfig, score: ScoreFunction) -> Result<Self> {
        let policy = Self { arms, config, score };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.score.validate(1)?;
        let first = self.arms.first().ok_or_else(|| ModalError::param("policy needs at least one arm"))?;
        for (i, a) in self.arms.iter().enumerate() {
            if a.is_empty() {
                return Err(ModalError::data(format!("arm {i} has no samples")));
            }
            if a.context_dim() != first.context_dim() {
                return Err(ModalError::Shape {
                    expected: first.context_dim(),
                    found: a.context_dim(),
                });
            }
        }
        Ok(())
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn context_dim(&self) -> usize {
        self.arms[0].context_dim()
    }

    /// Scored conditional mode of every arm at `x`.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.context_dim() {
            return Err(ModalError::Shape {
                expected: self.context_dim(),
                found: x.len(),
            });
        }
        self.arms
            .iter()
            .map(|a| Ok(self.score.apply(&[conditional_mode(a, x, &self.config)?])))
            .collect()
    }
}

/// `π̂(x)`: the arm with the highest scored conditional mode, ties to the
/// lowest id.
pub fn evaluate_policy(policy: &ContextualPolicy, x: &[f64]) -> Result<usize> {
    let scores = policy.scores(x)?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextualRun {
    pub record: RunRecord,
    /// Context emitted at each step, in pull order.
    pub contexts: Vec<Vec<f64>>,
}

/// Round-robin exploration for `n` steps. Each step draws a context from the
/// environment, pulls the next arm in turn and stores the pair with that arm.
pub fn run_contextual_uniform(
    env: &ContextualEnvironment,
    n: usize,
    config: &ConditionalModeConfig,
    score: &ScoreFunction,
    seed: u64,
) -> Result<(ContextualPolicy, ContextualRun)> {
    env.validate()?;
    config.validate()?;
    let k = env.num_arms();
    if n < k {
        return Err(ModalError::param(format!("horizon {n} is below the number of arms {k}")));
    }
    let mut ctx_rng = stream(seed, CONTEXT_STREAM);
    let mut arm_rngs: Vec<_> = (0..k as u64).map(|a| stream(seed, a)).collect();
    let mut joints = (0..k)
        .map(|_| JointSampleSet::new(env.context_dim))
        .collect::<Result<Vec<_>>>()?;
    let snapshot = serde_json::json!({ "conditional": config, "score": score });
    let mut record = RunRecord::new("contextual_uniform", seed, k, snapshot);
    let mut contexts = Vec::with_capacity(n);
    for t in 0..n {
        let x = env.sample_context(&mut ctx_rng);
        let arm = t % k;
        let r = env.sample(arm, &x, &mut arm_rngs[arm]);
        joints[arm].push(r, &x)?;
        record.push(arm, vec![r]);
        contexts.push(x);
    }
    record.final_estimates = vec![None; k];
    let policy = ContextualPolicy::new(joints, config.clone(), score.clone())?;
    Ok((policy, ContextualRun { record, contexts }))
}

/// Fraction of `grid` contexts where `π̂` agrees with the environment's
/// optimal arm, skipping contexts whose true gap is below `min_gap`.
pub fn policy_agreement(policy: &ContextualPolicy, env: &ContextualEnvironment, grid: &[Vec<f64>], min_gap: f64) -> Result<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for x in grid {
        if env.gap(x) < min_gap {
            continue;
        }
        total += 1;
        if evaluate_policy(policy, x)? == env.optimal_arm(x) {
            hits += 1;
        }
    }
    if total == 0 {
        return Err(ModalError::param("no grid point clears the gap threshold"));
    }
    Ok(hits as f64 / total as f64)
}
