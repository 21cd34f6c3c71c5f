use crate::env::{ArmStreams, RewardModel};
use crate::error::{ModalError, Result};
use crate::mode::ModeEstimatorConfig;

use super::{init_states, ArmState, BanditConfig, BurnInPolicy, RunRecord, ScoreFunction};

/// `log(1/δ) · log T / T^{1/(4+D)}`.
///
/// For `T < 2` the formula is nonpositive and carries no information; the
/// bonus is then `+∞` so an arm with fewer than two pulls is always chosen.
pub fn ucb_bonus(t: usize, delta: f64, dim: usize) -> f64 {
    if t < 2 {
        return f64::INFINITY;
    }
    let t = t as f64;
    (1.0 / delta).ln() * t.ln() / t.powf(1.0 / (4.0 + dim as f64))
}

/// Arm to pull next: the lowest-id arm still in burn-in, else the argmax of
/// `score(mode) + L · bonus` with ties to the lowest id.
pub fn ucb_select(
    states: &mut [ArmState],
    delta: f64,
    score: &ScoreFunction,
    burn_in: &BurnInPolicy,
    estimator: &ModeEstimatorConfig,
) -> Result<usize> {
    if states.is_empty() {
        return Err(ModalError::param("ucb_select needs at least one arm"));
    }
    if let Some(s) = states.iter().find(|s| s.pulls() < burn_in.initial_pulls_per_arm) {
        return Ok(s.arm_id);
    }
    let dim = states[0].rewards.dim();
    let lipschitz = score.lipschitz();
    let mut best = (f64::NEG_INFINITY, states[0].arm_id);
    for s in states.iter_mut() {
        let bonus = ucb_bonus(s.pulls(), delta, dim);
        let index = score.apply(&s.mode(estimator)?.location) + lipschitz * bonus;
        if index > best.0 {
            best = (index, s.arm_id);
        }
    }
    Ok(best.1)
}

/// `n` pulls of the modal UCB strategy with per-step confidence `δ/n`.
pub fn run_ucb<E: RewardModel + ?Sized>(env: &E, n: usize, config: &BanditConfig, seed: u64) -> Result<RunRecord> {
    let k = env.num_arms();
    config.validate(env.dimension())?;
    let n0 = config.burn_in.initial_pulls_per_arm;
    if n < k * n0 {
        return Err(ModalError::param(format!(
            "horizon {n} is below the burn-in total K·N0 = {}",
            k * n0
        )));
    }
    let step_delta = config.delta / n as f64;
    let mut states = init_states(k, env.dimension())?;
    let mut streams = ArmStreams::new(env, seed);
    let mut record = RunRecord::new("ucb", seed, k, serde_json::to_value(config)?);
    for _ in 0..n {
        let arm = ucb_select(&mut states, step_delta, &config.score, &config.burn_in, &config.estimator)?;
        let reward = streams.draw(arm);
        states[arm].record(&reward)?;
        record.push(arm, reward);
    }
    record.finish(&mut states, &config.estimator)?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ArmDistribution, FiniteEnvironment};
    use approx::assert_relative_eq;

    fn two_arms(a: f64, b: f64) -> FiniteEnvironment {
        FiniteEnvironment::new(vec![
            ArmDistribution::truncated_normal(a, 0.05),
            ArmDistribution::truncated_normal(b, 0.05),
        ])
        .unwrap()
    }

    #[test]
    fn bonus_values() {
        let e = std::f64::consts::E;
        // log T / T^{0.2} at T = 148 (e^5 rounded), 40-digit reference.
        assert_relative_eq!(ucb_bonus(148, 1.0 / e, 1), 1.839396919856448, epsilon = 1e-13);
        assert_eq!(ucb_bonus(100, 1.0, 1), 0.0);
        assert!(ucb_bonus(1, 0.05, 1).is_infinite());
    }

    #[test]
    fn bonus_shape() {
        // log T / T^{1/5} rises until T = e^5 ≈ 148.4 and falls afterwards.
        let b = |t| ucb_bonus(t, 0.05, 1);
        for t in 8..148 {
            assert!(b(t + 1) > b(t), "t = {t}");
        }
        for t in 149..1_000_000 {
            assert!(b(t + 1) < b(t), "t = {t}");
        }
    }

    #[test]
    fn select_rules() {
        let cfg = ModeEstimatorConfig::default();
        let burn = BurnInPolicy::default();
        let score = ScoreFunction::identity();
        let mut one = init_states(1, 1).unwrap();
        assert_eq!(ucb_select(&mut one, 0.05, &score, &burn, &cfg).unwrap(), 0);

        let mut states = init_states(2, 1).unwrap();
        for _ in 0..1000 {
            states[0].record(&[0.9]).unwrap();
        }
        for _ in 0..3 {
            states[1].record(&[0.2]).unwrap();
        }
        assert_eq!(ucb_select(&mut states, 0.05, &score, &burn, &cfg).unwrap(), 1);

        let mut tied = init_states(2, 1).unwrap();
        for s in tied.iter_mut() {
            for _ in 0..20 {
                s.record(&[0.5]).unwrap();
            }
        }
        assert_eq!(ucb_select(&mut tied, 0.05, &score, &burn, &cfg).unwrap(), 0);
        assert!(ucb_select(&mut [], 0.05, &score, &burn, &cfg).is_err());
    }

    #[test]
    fn single_arm_run() {
        let env = FiniteEnvironment::new(vec![ArmDistribution::truncated_normal(0.5, 0.1)]).unwrap();
        let rec = run_ucb(&env, 100, &BanditConfig::default(), 1).unwrap();
        assert!(rec.pull_sequence.iter().all(|&a| a == 0));
        assert_eq!(rec.per_arm_counts, vec![100]);
    }

    #[test]
    fn horizon_below_burn_in() {
        assert!(run_ucb(&two_arms(0.8, 0.2), 19, &BanditConfig::default(), 0).is_err());
    }

    #[test]
    fn separated_arms() {
        let env = two_arms(0.8, 0.2);
        let good = (0..100)
            .filter(|&seed| {
                let rec = run_ucb(&env, 1500, &BanditConfig::default(), seed).unwrap();
                rec.per_arm_counts[0] as f64 > 0.6 * 1500.0
            })
            .count();
        assert!(good >= 90, "{good}");
    }

    #[test]
    fn reproducible() {
        let env = two_arms(0.6, 0.4);
        let a = run_ucb(&env, 300, &BanditConfig::default(), 9).unwrap();
        let b = run_ucb(&env, 300, &BanditConfig::default(), 9).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = run_ucb(&env, 300, &BanditConfig::default(), 10).unwrap();
        assert_ne!(a.reward_sequence, c.reward_sequence);
    }
}
