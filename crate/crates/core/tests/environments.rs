use modal_core::env::{
    catalogue, contaminated_top_mode, hidden_context_stream, true_modes, ArmDistribution, Base, Component,
    FiniteEnvironment, HiddenContextSpec, RewardModel, Schedule,
};
use modal_core::experiment::Environment;
use modal_core::rng::stream;
use proptest::prelude::*;

fn mixture(parts: &[(f64, f64, f64)]) -> ArmDistribution {
    ArmDistribution::new(
        parts
            .iter()
            .map(|&(w, mean, sd)| Component::new(w, vec![Base::TruncatedNormal { mean, sd }]))
            .collect(),
    )
}

/// Composite Simpson rule on [0, 1] with the arm's breakpoints as panel edges.
fn integrate(arm: &ArmDistribution) -> f64 {
    let mut edges = arm.breakpoints();
    edges.extend([0.0, 1.0]);
    edges.retain(|x| (0.0..=1.0).contains(x));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let f = |x: f64| arm.pdf(&[x]);
    edges
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let n = 4000;
            let h = (b - a) / n as f64;
            let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
            h / 3.0 * (f(a) + inner + f(b))
        })
        .sum()
}

fn parts() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.1f64..1.0, 0.2f64..0.8, 0.02f64..0.06), 1..4).prop_map(|mut v| {
        let total: f64 = v.iter().map(|p| p.0).sum();
        for p in &mut v {
            p.0 /= total;
        }
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mixture_densities_integrate_to_one(p in parts()) {
        let arm = mixture(&p);
        let total = integrate(&arm);
        prop_assert!((total - 1.0).abs() < 1e-6, "{}", total);
    }

    #[test]
    fn modes_ignore_component_order(p in parts(), rot in 0usize..3) {
        let mut q = p.clone();
        let len = q.len();
        q.rotate_left(rot % len);
        let a = true_modes(&mixture(&p)).unwrap();
        let b = true_modes(&mixture(&q)).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.location[0] - y.location[0]).abs() < 1e-9);
            prop_assert!((x.density - y.density).abs() < 1e-9 * x.density.max(1.0));
        }
    }
}

#[test]
fn fig2_noise_leaves_top_modes_alone() {
    let cfg = catalogue::preset("fig2_contaminated").unwrap();
    let Environment::Finite(env) = cfg.environment.resolve().unwrap() else { panic!() };
    for arm in &env.arms {
        let clean = true_modes(arm).unwrap()[0].location[0];
        let dirty = contaminated_top_mode(arm).unwrap().location[0];
        assert!((clean - dirty).abs() < 1e-3, "{clean} vs {dirty}");
    }
}

#[test]
fn catalogue_means_sit_inside_the_truncation_margin() {
    for (name, cfg) in catalogue::figure_environments() {
        let Ok(Environment::Finite(env)) = cfg.environment.resolve() else { continue };
        for arm in &env.arms {
            for c in &arm.components {
                for b in &c.axes {
                    if let Base::TruncatedNormal { mean, sd } = b {
                        assert!(*mean >= 3.0 * sd && *mean <= 1.0 - 3.0 * sd, "{name}: {mean} {sd}");
                    }
                }
            }
        }
    }
}

#[test]
fn cloned_environments_draw_alike() {
    let env = FiniteEnvironment::new(vec![ArmDistribution::truncated_normal(0.4, 0.1)]).unwrap();
    let copy = env.clone();
    let (mut a, mut b) = (stream(8, 0), stream(8, 0));
    for _ in 0..100 {
        assert_eq!(env.sample(0, &mut a), copy.sample(0, &mut b));
    }
}

#[test]
fn hidden_context_examples() {
    let constant = HiddenContextSpec {
        mu1: 0.3,
        mu2: 0.7,
        sigma: 0.05,
        schedule: Schedule::Constant { p: 1.0 },
    };
    let s = hidden_context_stream(&constant, 2000, 1).unwrap();
    assert!((s.iter().sum::<f64>() / 2000.0 - 0.3).abs() < 0.01);

    let tight = HiddenContextSpec { sigma: 1e-3, ..constant };
    let s = hidden_context_stream(&tight, 500, 2).unwrap();
    assert!(s.iter().all(|v| (v - 0.3).abs() < 0.01));
}
