use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{ArmStreams, RewardModel};
use crate::error::{ModalError, Result};
use crate::rng::{stream, STRATEGY_STREAM};

use super::{init_states, ArmState, BanditConfig, RunRecord};

/// `Σ_{i ≥ n0} 1/i² = π²/6 − Σ_{i < n0} 1/i²`.
pub fn basel_tail(n0: usize) -> f64 {
    let head: f64 = (1..n0).map(|i| 1.0 / (i as f64 * i as f64)).sum();
    std::f64::consts::PI.powi(2) / 6.0 - head
}

/// Anytime confidence radius
/// `U(t, δ) = (log(c t²) + log(1/δ)) · log t / t^{1/(4+D)}` with `c` the
/// Basel tail from `n0`. Infinite for `t < 2`, where the formula degenerates.
pub fn confidence_u(t: usize, delta: f64, dim: usize, n0: usize) -> f64 {
    if t < 2 {
        return f64::INFINITY;
    }
    let tf = t as f64;
    let c = basel_tail(n0.max(1));
    ((c * tf * tf).ln() + (1.0 / delta).ln()) * tf.ln() / tf.powf(1.0 / (4.0 + dim as f64))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopMOptions {
    /// Always pull the less-pulled of `h_t` and `l_t` instead of the
    /// randomized choice (ties to `h_t`). For debugging.
    pub deterministic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopMResult {
    /// Selected arm ids, ascending.
    pub selected: Vec<usize>,
    pub record: RunRecord,
    /// The confidence stopping rule fired, as opposed to the budget running out.
    pub terminated_early: bool,
}

struct Bounds {
    high: Vec<usize>,
    h: usize,
    l: usize,
    b_h: f64,
    b_l: f64,
}

fn bounds(states: &mut [ArmState], m: usize, config: &BanditConfig, dim: usize) -> Result<Bounds> {
    let k = states.len();
    let n0 = config.burn_in.initial_pulls_per_arm;
    let lip = config.score.lipschitz();
    let mut theta = Vec::with_capacity(k);
    for s in states.iter_mut() {
        theta.push(config.score.apply(&s.mode(&config.estimator)?.location));
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| theta[b].total_cmp(&theta[a]).then(a.cmp(&b)));
    let (high, low) = order.split_at(m);
    let delta_h = config.delta / (2.0 * (k - m) as f64);
    let delta_l = config.delta / (2.0 * m as f64);
    let lower = |i: usize| theta[i] - lip * confidence_u(states[i].pulls(), delta_h, dim, n0);
    let upper = |i: usize| theta[i] + lip * confidence_u(states[i].pulls(), delta_l, dim, n0);
    let mut h = high[0];
    for &i in high {
        if lower(i) < lower(h) || (lower(i) == lower(h) && i < h) {
            h = i;
        }
    }
    let mut l = low[0];
    for &i in low {
        if upper(i) > upper(l) || (upper(i) == upper(l) && i < l) {
            l = i;
        }
    }
    let mut high = high.to_vec();
    high.sort_unstable();
    Ok(Bounds {
        high,
        h,
        l,
        b_h: lower(h),
        b_l: upper(l),
    })
}

/// Top-m identification with confidence stopping.
///
/// After `N₀` pulls of every arm, each round forms `H_t` (the `m` arms with
/// the highest scored sample modes, ties to lower ids), the lowest lower
/// bound `h_t` in `H_t` with radius `U(T, δ/(2(K−m)))` and the highest upper
/// bound `l_t` outside it with radius `U(T, δ/(2m))`. The run stops as soon
/// as `b_{h_t} ≥ b_{l_t}`, or when `max_pulls` pulls have been made.
/// Otherwise `h_t` is pulled with probability `T_{l_t}/(T_{h_t} + T_{l_t})`
/// and `l_t` otherwise.
pub fn run_top_m<E: RewardModel + ?Sized>(
    env: &E,
    m: usize,
    config: &BanditConfig,
    max_pulls: usize,
    options: TopMOptions,
    seed: u64,
) -> Result<TopMResult> {
    let k = env.num_arms();
    let dim = env.dimension();
    config.validate(dim)?;
    if m == 0 || m >= k {
        return Err(ModalError::param(format!("m must lie in 1..K-1 = 1..{}, got {m}", k - 1)));
    }
    let n0 = config.burn_in.initial_pulls_per_arm;
    if max_pulls < k * n0 {
        return Err(ModalError::param(format!(
            "max_pulls {max_pulls} is below the burn-in total K·N0 = {}",
            k * n0
        )));
    }
    let mut states = init_states(k, dim)?;
    let mut streams = ArmStreams::new(env, seed);
    let mut coin = stream(seed, STRATEGY_STREAM);
    let snapshot = serde_json::json!({ "bandit": config, "m": m, "max_pulls": max_pulls, "options": options });
    let mut record = RunRecord::new("top_m", seed, k, snapshot);
    let mut pull = |arm: usize, states: &mut [ArmState], record: &mut RunRecord| -> Result<()> {
        let reward = streams.draw(arm);
        states[arm].record(&reward)?;
        record.push(arm, reward);
        Ok(())
    };
    for arm in 0..k {
        for _ in 0..n0 {
            pull(arm, &mut states, &mut record)?;
        }
    }
    let mut terminated_early = false;
    let selected = loop {
        let b = bounds(&mut states, m, config, dim)?;
        if b.b_h >= b.b_l {
            terminated_early = true;
            break b.high;
        }
        if record.horizon() >= max_pulls {
            break b.high;
        }
        let (th, tl) = (states[b.h].pulls(), states[b.l].pulls());
        let arm = if options.deterministic {
            if th <= tl {
                b.h
            } else {
                b.l
            }
        } else if coin.random::<f64>() < tl as f64 / (th + tl) as f64 {
            b.h
        } else {
            b.l
        };
        pull(arm, &mut states, &mut record)?;
    };
    record.finish(&mut states, &config.estimator)?;
    Ok(TopMResult {
        selected,
        record,
        terminated_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ArmDistribution, FiniteEnvironment};
    use approx::assert_relative_eq;

    fn env(modes: &[f64]) -> FiniteEnvironment {
        FiniteEnvironment::new(modes.iter().map(|&m| ArmDistribution::truncated_normal(m, 0.05)).collect()).unwrap()
    }

    #[test]
    fn basel_constants() {
        assert_relative_eq!(basel_tail(1), 1.6449340668482264, epsilon = 1e-15);
        assert_relative_eq!(basel_tail(2), 0.6449340668482264, epsilon = 1e-15);
        // 40-digit reference value of the tail from 10.
        assert_relative_eq!(basel_tail(10), 0.10516633568168575, epsilon = 1e-14);
    }

    #[test]
    fn u_golden() {
        assert_relative_eq!(confidence_u(100, 0.05, 1, 10), 18.248923022026404, epsilon = 1e-12);
        assert!(confidence_u(1, 0.05, 1, 10).is_infinite());
    }

    #[test]
    fn argument_checks() {
        let e = env(&[0.9, 0.5, 0.1]);
        let cfg = BanditConfig::default();
        assert!(run_top_m(&e, 0, &cfg, 1000, TopMOptions::default(), 0).is_err());
        assert!(run_top_m(&e, 3, &cfg, 1000, TopMOptions::default(), 0).is_err());
        assert!(run_top_m(&e, 1, &cfg, 29, TopMOptions::default(), 0).is_err());
    }

    #[test]
    fn budget_exit() {
        let e = env(&[0.9, 0.6, 0.2]);
        let r = run_top_m(&e, 2, &BanditConfig::default(), 60, TopMOptions::default(), 3).unwrap();
        assert!(!r.terminated_early);
        assert_eq!(r.record.horizon(), 60);
        assert_eq!(r.selected.len(), 2);
        assert_eq!(r.record.per_arm_counts.iter().sum::<usize>(), 60);
    }

    #[test]
    fn sampling_stays_on_boundary_arms() {
        let e = env(&[0.9, 0.75, 0.6, 0.35, 0.15]);
        let r = run_top_m(&e, 2, &BanditConfig::default(), 600, TopMOptions::default(), 1).unwrap();
        assert_eq!(r.selected, vec![0, 1]);
        let det = run_top_m(&e, 2, &BanditConfig::default(), 600, TopMOptions { deterministic: true }, 1).unwrap();
        assert_eq!(det.selected, vec![0, 1]);
        // The far arms only see their burn-in pulls.
        assert_eq!(det.record.per_arm_counts[4], 10);
    }

    #[test]
    fn permutation_of_arms() {
        let modes = [0.9, 0.75, 0.6, 0.35, 0.15];
        let perm = [3, 0, 4, 1, 2];
        let permuted: Vec<f64> = perm.iter().map(|&i| modes[i]).collect();
        let cfg = BanditConfig::default();
        let opts = TopMOptions { deterministic: true };
        let a = run_top_m(&env(&modes), 2, &cfg, 400, opts, 5).unwrap();
        let b = run_top_m(&env(&permuted), 2, &cfg, 400, opts, 5).unwrap();
        let mut relabeled: Vec<usize> = b.selected.iter().map(|&j| perm[j]).collect();
        relabeled.sort_unstable();
        assert_eq!(a.selected, relabeled);
    }
}
