use crate::error::{ModalError, Result};
use crate::knn::SampleSet;
use crate::mode::ModeEstimatorConfig;

use super::{sample_mode, GapProfile, RunRecord, ScoreFunction};

/// `R(n) = n · max θ − Σ_t θ_{I_t}`, accumulated as `Σ_t (max θ − θ_{I_t})`
/// so that pulls of the best arm contribute exactly zero.
pub fn regret_mode(record: &RunRecord, truth: &GapProfile) -> Result<f64> {
    Ok(regret_curve(record, truth)?.last().copied().unwrap_or(0.0))
}

/// `R(t)` for `t = 1, …, n`.
pub fn regret_curve(record: &RunRecord, truth: &GapProfile) -> Result<Vec<f64>> {
    let best = truth.best();
    let mut acc = 0.0;
    record
        .pull_sequence
        .iter()
        .map(|&arm| {
            let theta = truth
                .thetas
                .get(arm)
                .ok_or_else(|| ModalError::data(format!("arm {arm} has no true value")))?;
            acc += best - theta;
            Ok(acc)
        })
        .collect()
}

/// `R̄(n) = max_i n · score(mode(X_{i,1..n})) − Σ_i T_i(n) · score(mode(S_i))`.
///
/// `streams[i]` holds arm `i`'s counterfactual rewards: the draws it would
/// have produced had it been pulled at every step. With per-arm generators,
/// the rewards actually observed from an arm are a prefix of its stream.
pub fn regret_sample_mode(
    record: &RunRecord,
    streams: &[SampleSet<f64>],
    score: &ScoreFunction,
    estimator: &ModeEstimatorConfig,
) -> Result<f64> {
    let n = record.horizon();
    let curve = sample_regret_curve(record, streams, score, estimator, &[n])?;
    Ok(curve[0])
}

/// `R̄(t)` at each requested checkpoint `t ≤ n`.
pub fn sample_regret_curve(
    record: &RunRecord,
    streams: &[SampleSet<f64>],
    score: &ScoreFunction,
    estimator: &ModeEstimatorConfig,
    checkpoints: &[usize],
) -> Result<Vec<f64>> {
    let k = record.per_arm_counts.len();
    if streams.len() != k {
        return Err(ModalError::data(format!("{} streams for {k} arms", streams.len())));
    }
    let n = record.horizon();
    if let Some(s) = streams.iter().find(|s| s.len() < checkpoints.iter().copied().max().unwrap_or(0)) {
        return Err(ModalError::data(format!(
            "counterfactual stream of length {} is shorter than the horizon",
            s.len()
        )));
    }
    let dim = streams[0].dim();
    let observed: Vec<SampleSet<f64>> = (0..k).map(|a| record.rewards_of(a, dim)).collect::<Result<_>>()?;
    let mut counts = vec![0usize; k];
    let mut t = 0;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        if c == 0 || c > n {
            return Err(ModalError::param(format!("checkpoint {c} outside 1..={n}")));
        }
        if c < t {
            return Err(ModalError::param("checkpoints must be increasing"));
        }
        while t < c {
            counts[record.pull_sequence[t]] += 1;
            t += 1;
        }
        let mut best = f64::NEG_INFINITY;
        for s in streams {
            let m = sample_mode(&s.prefix(c), estimator)?;
            best = best.max(c as f64 * score.apply(&m.location));
        }
        let mut earned = 0.0;
        for (arm, &ti) in counts.iter().enumerate() {
            if ti > 0 {
                let m = sample_mode(&observed[arm].prefix(ti), estimator)?;
                earned += ti as f64 * score.apply(&m.location);
            }
        }
        out.push(best - earned);
    }
    Ok(out)
}
