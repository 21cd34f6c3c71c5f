use serde::{Deserialize, Serialize};

use crate::env::{ArmStreams, RewardModel};
use crate::error::{ModalError, Result};

use super::{init_states, BanditConfig, RunRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformResult {
    pub record: RunRecord,
    /// Arm ids by decreasing score of their sample mode, ties by id.
    pub ranking: Vec<usize>,
    /// Score of each arm's final sample mode, by arm id.
    pub scores: Vec<f64>,
}

/// Round robin: each step pulls the least-pulled arm, lowest id first. The
/// arms are then ranked by the score of their sample modes.
pub fn run_uniform<E: RewardModel + ?Sized>(env: &E, n: usize, config: &BanditConfig, seed: u64) -> Result<UniformResult> {
    let k = env.num_arms();
    config.validate(env.dimension())?;
    if n < k {
        return Err(ModalError::param(format!("horizon {n} is below the number of arms {k}")));
    }
    let mut states = init_states(k, env.dimension())?;
    let mut streams = ArmStreams::new(env, seed);
    let mut record = RunRecord::new("uniform", seed, k, serde_json::to_value(config)?);
    for t in 0..n {
        let arm = t % k;
        let reward = streams.draw(arm);
        states[arm].record(&reward)?;
        record.push(arm, reward);
    }
    record.finish(&mut states, &config.estimator)?;
    let scores: Vec<f64> = record
        .final_estimates
        .iter()
        .map(|m| config.score.apply(m.as_ref().expect("every arm pulled")))
        .collect();
    let mut ranking: Vec<usize> = (0..k).collect();
    ranking.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(UniformResult { record, ranking, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ArmDistribution, FiniteEnvironment};

    fn env(modes: &[f64]) -> FiniteEnvironment {
        FiniteEnvironment::new(modes.iter().map(|&m| ArmDistribution::truncated_normal(m, 0.05)).collect()).unwrap()
    }

    #[test]
    fn counts() {
        let e = env(&[0.8, 0.5, 0.2]);
        let cfg = BanditConfig::default();
        assert_eq!(run_uniform(&e, 9, &cfg, 0).unwrap().record.per_arm_counts, vec![3, 3, 3]);
        assert_eq!(run_uniform(&e, 10, &cfg, 0).unwrap().record.per_arm_counts, vec![4, 3, 3]);
        assert!(run_uniform(&e, 2, &cfg, 0).is_err());
    }

    #[test]
    fn ranking_recovers_order() {
        let e = env(&[0.8, 0.5, 0.2]);
        let cfg = BanditConfig::default();
        let hits = (0..100)
            .filter(|&s| run_uniform(&e, 3000, &cfg, s).unwrap().ranking == vec![0, 1, 2])
            .count();
        assert!(hits >= 95, "{hits}");
    }
}
