use modal_core::bandit::ScoreFunction;
use modal_core::conditional::ConditionalModeConfig;
use modal_core::contextual::{policy_agreement, run_contextual_uniform};
use modal_core::env::{ContextualEnvironment, ContinuumEnvironment};
use modal_core::zooming::{run_zooming, ZoomingConfig};
use proptest::prelude::*;

#[test]
fn policy_agreement_does_not_drop_with_more_data() {
    let env = ContextualEnvironment::crossing();
    let grid: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 / 99.0]).collect();
    let cfg = ConditionalModeConfig::default();
    let score = ScoreFunction::identity();
    let agreement = |n: usize, seed: u64| {
        let (policy, _) = run_contextual_uniform(&env, n, &cfg, &score, seed).unwrap();
        policy_agreement(&policy, &env, &grid, 0.06).unwrap()
    };
    let mut ok = 0;
    for seed in 0..100 {
        if agreement(50_000, seed) >= agreement(10_000, seed) {
            ok += 1;
        }
    }
    assert!(ok >= 80, "{ok}/100");
}

#[test]
#[ignore = "fails: each phase samples fresh arms around the previous winner, so the center can move away from the optimum even when the winner is picked with exact arm values"]
fn zooming_closes_in_over_the_last_phases() {
    let env = ContinuumEnvironment::quadratic();
    let cfg = ZoomingConfig::new(vec![0.5]);
    let target = env.optimum().unwrap()[0];
    let mut ok = 0;
    for seed in 0..100 {
        let res = run_zooming(&env, &cfg, seed).unwrap();
        let d: Vec<f64> = res.phases.iter().map(|p| (p.center[0] - target).abs()).collect();
        let half = d.len() / 2;
        if d[half..].windows(2).all(|w| w[1] <= w[0]) {
            ok += 1;
        }
    }
    assert!(ok >= 80, "{ok}/100");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zooming_trace_invariants(
        seed in 0u64..1000,
        arms in 2usize..6,
        phase_length in 200usize..500,
        phases in 1usize..5,
        extra in 0usize..150,
        r0 in 0.1f64..1.5,
        start in 0.0f64..=1.0,
    ) {
        let env = ContinuumEnvironment::quadratic();
        let mut cfg = ZoomingConfig::new(vec![start]);
        cfg.arms_per_phase = arms;
        cfg.phase_length = phase_length;
        cfg.initial_radius = r0;
        cfg.horizon = phases * phase_length + extra.min(phase_length - 1);
        cfg.burn_in = modal_core::bandit::BurnInPolicy::new(20);
        cfg.estimator = modal_core::ModeEstimatorConfig::default();
        let res = run_zooming(&env, &cfg, seed).unwrap();
        prop_assert_eq!(res.phases.len(), cfg.horizon / phase_length);
        for (j, p) in res.phases.iter().enumerate() {
            prop_assert_eq!(p.radius, r0 * 2f64.powi(-(j as i32)));
            prop_assert_eq!(p.active_arms.len(), arms);
            for a in &p.active_arms {
                prop_assert!((a[0] - p.center[0]).abs() <= p.radius);
                if !p.clamped {
                    prop_assert!(env.contains(a));
                }
            }
            if j > 0 {
                prop_assert_eq!(&p.center, &res.phases[j - 1].argmax);
            }
        }
    }
}
