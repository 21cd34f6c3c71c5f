//! Mean and standard deviation over seeds.

use std::collections::BTreeMap;

use modal_core::bandit::RunRecord;
use modal_core::experiment::{ExperimentConfig, Strategy};
use serde::Serialize;

use crate::runner::SeedOutcome;

/// Mean and population standard deviation of one column of values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    /// The mean is clamped to the observed range, so rounding can never
    /// push it outside `[min, max]`. With one value both are exact.
    pub fn of(values: &[f64]) -> Stat {
        if values.is_empty() {
            return Stat { mean: f64::NAN, sd: f64::NAN };
        }
        let n = values.len() as f64;
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = (values.iter().sum::<f64>() / n).clamp(lo, hi);
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Stat { mean, sd: var.sqrt() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AggregateResult {
    pub seeds: usize,
    pub arms: usize,
    /// `pulls[t - 1][arm]`: cumulative pulls of `arm` after `t` steps. Runs
    /// that stopped early keep their final counts.
    #[serde(skip)]
    pub pulls: Vec<Vec<Stat>>,
    /// `R(t)` for `t = 1..=n`.
    #[serde(skip)]
    pub regret: Vec<Stat>,
    /// Mean of `R(t)/t`.
    #[serde(skip)]
    pub normalized: Vec<f64>,
    /// `(t, R̄(t))` at the checkpoints.
    #[serde(skip)]
    pub sample_regret: Vec<(usize, Stat)>,
    /// How many seeds ended on each answer: the most pulled arm, the
    /// ranking, the selected set, or the final arm rounded to two places.
    pub final_answers: BTreeMap<String, usize>,
    /// Seeds in which each arm was pulled most.
    pub most_pulled: Vec<usize>,
    /// Top-m runs that stopped on the confidence rule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_terminations: Option<usize>,
    /// Contextual policy agreement with the true policy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<Stat>,
    /// Per-coordinate final arm of zooming runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_arm: Option<Vec<Stat>>,
}

/// Cumulative counts after each step, padded to `horizon` rows.
fn cumulative(record: &RunRecord, arms: usize, horizon: usize) -> Vec<Vec<u32>> {
    let mut counts = vec![0u32; arms];
    let mut rows = Vec::with_capacity(horizon);
    for &a in &record.pull_sequence {
        counts[a] += 1;
        rows.push(counts.clone());
    }
    while rows.len() < horizon {
        rows.push(counts.clone());
    }
    rows
}

fn join(ids: &[usize]) -> String {
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

fn column<F: Fn(usize) -> f64>(len: usize, f: F) -> Vec<f64> {
    (0..len).map(f).collect()
}

pub fn aggregate(cfg: &ExperimentConfig, outcomes: &[(u64, SeedOutcome)], checkpoints: &[usize]) -> AggregateResult {
    let mut out = AggregateResult {
        seeds: outcomes.len(),
        ..AggregateResult::default()
    };
    let records: Vec<&RunRecord> = outcomes.iter().filter_map(|(_, o)| o.record()).collect();
    if let Some(first) = records.first() {
        let arms = first.per_arm_counts.len();
        let horizon = records.iter().map(|r| r.horizon()).max().unwrap_or(0);
        let tables: Vec<Vec<Vec<u32>>> = records.iter().map(|r| cumulative(r, arms, horizon)).collect();
        out.arms = arms;
        out.pulls = (0..horizon)
            .map(|t| {
                (0..arms)
                    .map(|a| Stat::of(&column(tables.len(), |s| tables[s][t][a] as f64)))
                    .collect()
            })
            .collect();
        out.most_pulled = vec![0; arms];
        for r in &records {
            out.most_pulled[r.most_pulled()] += 1;
        }
    }

    let bandits: Vec<_> = outcomes
        .iter()
        .filter_map(|(_, o)| match o {
            SeedOutcome::Bandit(b) => Some(b),
            _ => None,
        })
        .collect();
    if !bandits.is_empty() && !bandits[0].regret.is_empty() {
        let n = bandits[0].regret.len();
        out.regret = (0..n)
            .map(|t| Stat::of(&column(bandits.len(), |s| bandits[s].regret[t])))
            .collect();
        out.normalized = (0..n)
            .map(|t| Stat::of(&column(bandits.len(), |s| bandits[s].regret[t] / (t + 1) as f64)).mean)
            .collect();
        out.sample_regret = checkpoints
            .iter()
            .enumerate()
            .map(|(j, &t)| (t, Stat::of(&column(bandits.len(), |s| bandits[s].sample_regret[j]))))
            .collect();
    }

    let mut answer = |key: String| *out.final_answers.entry(key).or_insert(0) += 1;
    match cfg.strategy {
        Strategy::Ucb => bandits.iter().for_each(|b| answer(b.record.most_pulled().to_string())),
        Strategy::Uniform => bandits
            .iter()
            .for_each(|b| answer(join(b.ranking.as_deref().unwrap_or_default()))),
        Strategy::TopM => {
            let mut early = 0;
            for b in &bandits {
                if let Some((set, stopped)) = &b.selected {
                    answer(join(set));
                    early += usize::from(*stopped);
                }
            }
            out.early_terminations = Some(early);
        }
        Strategy::ContextualUniform => {
            let values: Vec<f64> = outcomes
                .iter()
                .filter_map(|(_, o)| match o {
                    SeedOutcome::Contextual { agreement, .. } => Some(*agreement),
                    _ => None,
                })
                .collect();
            out.agreement = Some(Stat::of(&values));
        }
        Strategy::Zooming => {
            let bests: Vec<&Vec<f64>> = outcomes
                .iter()
                .filter_map(|(_, o)| match o {
                    SeedOutcome::Zooming(z) => Some(&z.best_arm),
                    _ => None,
                })
                .collect();
            for b in &bests {
                let key = b.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(",");
                answer(key);
            }
            let dim = bests.first().map_or(0, |b| b.len());
            out.best_arm = Some((0..dim).map(|d| Stat::of(&column(bests.len(), |s| bests[s][d]))).collect());
        }
    }
    out
}
