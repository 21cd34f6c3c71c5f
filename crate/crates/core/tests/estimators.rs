use modal_core::conditional::{conditional_mode, ConditionalModeConfig, JointSampleSet};
use modal_core::contextual::{evaluate_policy, ContextualPolicy};
use modal_core::rng::stream;
use modal_core::{
    estimate_mode, estimate_p_modes, knn_radius, private_mode, KnnQuery, ModeEstimatorConfig, PrivacyParams,
    SampleSet64,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn points(raw: &[(u8, u8)], dim: usize) -> Vec<Vec<f64>> {
    raw.iter()
        .map(|&(a, b)| {
            let v = [a as f64 / 64.0, b as f64 / 64.0];
            v[..dim].to_vec()
        })
        .collect()
}

fn set(rows: &[Vec<f64>], dim: usize) -> SampleSet64 {
    SampleSet64::from_flat(rows.concat(), dim).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shuffling_never_changes_estimates(
        raw in prop::collection::vec((0u8..=64, 0u8..=64), 1..200),
        dim in 1usize..=2,
        kfrac in 0.0f64..1.0,
        seed in 0u64..1000,
    ) {
        let rows = points(&raw, dim);
        let k = 1 + (kfrac * (rows.len() - 1) as f64) as usize;
        let cfg = ModeEstimatorConfig::default().with_k(k);
        let a = estimate_mode(&set(&rows, dim), &cfg).unwrap();
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut stream(seed, 0));
        let b = estimate_mode(&set(&shuffled, dim), &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn single_p_mode_is_the_mode(raw in prop::collection::vec((0u8..=64, 0u8..=64), 1..200), dim in 1usize..=2) {
        let rows = points(&raw, dim);
        let s = set(&rows, dim);
        let cfg = ModeEstimatorConfig::default();
        let one = estimate_p_modes(&s, &cfg).unwrap();
        prop_assert_eq!(one.len(), 1);
        prop_assert_eq!(&one[0].location, &estimate_mode(&s, &cfg).unwrap().location);
    }

    #[test]
    fn mode_radius_is_minimal(raw in prop::collection::vec((0u8..=64, 0u8..=64), 1..120), k in 1usize..20) {
        let rows = points(&raw, 2);
        let k = k.min(rows.len());
        let s = set(&rows, 2);
        let est = estimate_mode(&s, &ModeEstimatorConfig::default().with_k(k)).unwrap();
        let r = |p: &Vec<f64>| knn_radius(&s, &KnnQuery::new(p.clone(), k)).unwrap();
        let best = r(&est.location);
        prop_assert!(rows.iter().all(|p| r(p) >= best));
    }

    #[test]
    fn private_release_is_reproducible(seed in 0u64..10_000, sigma in 0.0f64..0.5) {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i * 7 % 60) as f64 / 60.0]).collect();
        let s = set(&rows, 1);
        let cfg = ModeEstimatorConfig::default();
        let p = PrivacyParams::new(1.0, 1e-6).with_sigma(sigma);
        let a = private_mode(&s, &cfg, &p, seed).unwrap();
        let b = private_mode(&s, &cfg, &p, seed).unwrap();
        prop_assert_eq!(a[0].to_bits(), b[0].to_bits());
    }

    #[test]
    fn conditional_mode_lies_on_the_grid(
        raw in prop::collection::vec((0u8..=64, 0u8..=64), 1..150),
        q in 0u8..=64,
        m in 2usize..80,
    ) {
        let joint = JointSampleSet::from_pairs(1, raw.iter().map(|&(r, x)| (r as f64 / 64.0, [x as f64 / 64.0]))).unwrap();
        let cfg = ConditionalModeConfig::default().with_m(m);
        let r = conditional_mode(&joint, &[q as f64 / 64.0], &cfg).unwrap();
        let i = (r * m as f64).round() as usize;
        prop_assert!((1..m).contains(&i));
        prop_assert_eq!(r, i as f64 / m as f64);
    }

    #[test]
    fn policy_ignores_pair_order(
        a in prop::collection::vec((0u8..=64, 0u8..=64), 5..80),
        b in prop::collection::vec((0u8..=64, 0u8..=64), 5..80),
        seed in 0u64..100,
        q in 0u8..=64,
    ) {
        let joint = |raw: &[(u8, u8)]| {
            JointSampleSet::from_pairs(1, raw.iter().map(|&(r, x)| (r as f64 / 64.0, [x as f64 / 64.0]))).unwrap()
        };
        let cfg = ConditionalModeConfig::default().with_m(20);
        let score = modal_core::bandit::ScoreFunction::identity();
        let policy = ContextualPolicy::new(vec![joint(&a), joint(&b)], cfg.clone(), score.clone()).unwrap();
        let mut rng = stream(seed, 1);
        let (mut a2, mut b2) = (a.clone(), b.clone());
        a2.shuffle(&mut rng);
        b2.shuffle(&mut rng);
        let shuffled = ContextualPolicy::new(vec![joint(&a2), joint(&b2)], cfg, score).unwrap();
        let x = [q as f64 / 64.0];
        let first = evaluate_policy(&policy, &x).unwrap();
        prop_assert_eq!(first, evaluate_policy(&policy, &x).unwrap());
        prop_assert_eq!(first, evaluate_policy(&shuffled, &x).unwrap());
        prop_assert_eq!(policy.scores(&x).unwrap(), shuffled.scores(&x).unwrap());
    }
}

#[test]
fn separated_cluster_cannot_take_over() {
    // 400 points near 0.3; ell < k far-away points spread out so that none
    // of them has a small (k - ell)-NN radius
    let rows: Vec<Vec<f64>> = (0..400).map(|i| vec![0.3 + (i as f64 - 200.0) * 1e-4]).collect();
    let clean = set(&rows, 1);
    let k = 40;
    let cfg = ModeEstimatorConfig::default().with_k(k);
    let before = estimate_mode(&clean, &cfg).unwrap();
    let mut dirty = rows.clone();
    for j in 0..30 {
        dirty.push(vec![0.6 + j as f64 * 0.01]);
    }
    let after = estimate_mode(&set(&dirty, 1), &cfg).unwrap();
    assert_eq!(before.location, after.location);
}
