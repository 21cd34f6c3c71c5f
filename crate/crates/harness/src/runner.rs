//! Runs every seed of an experiment, optionally on a thread pool.

use modal_core::bandit::{
    regret_curve, run_top_m, run_ucb, run_uniform, sample_regret_curve, GapProfile, RunRecord,
};
use modal_core::contextual::{policy_agreement, run_contextual_uniform, ContextualPolicy};
use modal_core::env::{counterfactual_streams, FiniteEnvironment};
use modal_core::experiment::{Environment, ExperimentConfig, Strategy};
use modal_core::zooming::{run_zooming, ZoomingResult};
use modal_core::{ModalError, Result};
use rayon::prelude::*;

use crate::aggregate::{aggregate, AggregateResult};

/// Everything one seed produced.
#[derive(Debug, Clone)]
pub enum SeedOutcome {
    Bandit(BanditOutcome),
    Contextual { record: RunRecord, agreement: f64, policy: ContextualPolicy },
    Zooming(ZoomingResult),
}

#[derive(Debug, Clone)]
pub struct BanditOutcome {
    pub record: RunRecord,
    /// `R(t)` for `t = 1..=n`; empty for top-m runs.
    pub regret: Vec<f64>,
    /// `R̄` at the experiment's checkpoints; empty for top-m runs.
    pub sample_regret: Vec<f64>,
    /// Top-m answer and whether the stopping rule fired.
    pub selected: Option<(Vec<usize>, bool)>,
    /// Uniform-exploration ranking.
    pub ranking: Option<Vec<usize>>,
}

impl SeedOutcome {
    pub fn record(&self) -> Option<&RunRecord> {
        match self {
            SeedOutcome::Bandit(b) => Some(&b.record),
            SeedOutcome::Contextual { record, .. } => Some(record),
            SeedOutcome::Zooming(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// True `θ_i` of finite environments.
    pub truth: Option<GapProfile>,
    pub checkpoints: Vec<usize>,
    pub seeds: Vec<(u64, SeedOutcome)>,
    pub aggregate: AggregateResult,
}

/// `count` evenly spaced times in `1..=n`, always ending at `n`.
pub fn checkpoints(n: usize, count: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (1..=count)
        .map(|j| ((j as u128 * n as u128) / count as u128) as usize)
        .filter(|&t| t >= 1)
        .collect();
    out.dedup();
    out
}

fn finite(env: &Environment) -> Result<&FiniteEnvironment> {
    match env {
        Environment::Finite(f) => Ok(f),
        _ => Err(ModalError::Parameter("strategy needs a finite environment".into())),
    }
}

fn bandit_seed(
    cfg: &ExperimentConfig,
    env: &FiniteEnvironment,
    truth: &GapProfile,
    checkpoints: &[usize],
    seed: u64,
) -> Result<BanditOutcome> {
    let bandit = cfg.bandit();
    let (record, selected, ranking) = match cfg.strategy {
        Strategy::Ucb => (run_ucb(env, cfg.horizon, &bandit, seed)?, None, None),
        Strategy::Uniform => {
            let r = run_uniform(env, cfg.horizon, &bandit, seed)?;
            (r.record, None, Some(r.ranking))
        }
        Strategy::TopM => {
            let m = cfg.top_m.as_ref().map(|t| t.m).unwrap_or(1);
            let r = run_top_m(env, m, &bandit, cfg.horizon, cfg.top_m_options(), seed)?;
            (r.record, Some((r.selected, r.terminated_early)), None)
        }
        _ => unreachable!("bandit_seed is only called for finite-arm strategies"),
    };
    let (regret, sample_regret) = if cfg.strategy == Strategy::TopM {
        (Vec::new(), Vec::new())
    } else {
        let streams = counterfactual_streams(env, seed, cfg.horizon)?;
        (
            regret_curve(&record, truth)?,
            sample_regret_curve(&record, &streams, &bandit.score, &bandit.estimator, checkpoints)?,
        )
    };
    Ok(BanditOutcome {
        record,
        regret,
        sample_regret,
        selected,
        ranking,
    })
}

fn run_seed(
    cfg: &ExperimentConfig,
    env: &Environment,
    truth: Option<&GapProfile>,
    checkpoints: &[usize],
    seed: u64,
) -> Result<SeedOutcome> {
    match cfg.strategy {
        Strategy::Ucb | Strategy::Uniform | Strategy::TopM => {
            let truth = truth.expect("finite environments have a truth profile");
            Ok(SeedOutcome::Bandit(bandit_seed(cfg, finite(env)?, truth, checkpoints, seed)?))
        }
        Strategy::ContextualUniform => {
            let Environment::Contextual(c) = env else {
                return Err(ModalError::Parameter("strategy needs a contextual environment".into()));
            };
            let params = cfg.contextual.clone().unwrap_or_default();
            let (policy, run) = run_contextual_uniform(c, cfg.horizon, &params.conditional, &cfg.score, seed)?;
            let grid = params.grid(c.context_dim);
            let agreement = policy_agreement(&policy, c, &grid, params.min_gap)?;
            Ok(SeedOutcome::Contextual {
                record: run.record,
                agreement,
                policy,
            })
        }
        Strategy::Zooming => {
            let Environment::Continuum(c) = env else {
                return Err(ModalError::Parameter("strategy needs a continuum environment".into()));
            };
            Ok(SeedOutcome::Zooming(run_zooming(c, &cfg.zooming_config()?, seed)?))
        }
    }
}

/// Runs all seeds of `cfg`. With `jobs > 1` seeds run on a thread pool; the
/// results are ordered by seed either way, so the output does not depend on
/// `jobs`.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentResult> {
    cfg.validate()?;
    let env = cfg.environment.resolve()?;
    let truth = match &env {
        Environment::Finite(f) => Some(GapProfile::from_environment(f, &cfg.score, cfg.estimator.p)?),
        _ => None,
    };
    let cps = checkpoints(cfg.horizon, cfg.regret_checkpoints);
    let seeds: Vec<u64> = cfg.seeds.iter().collect();
    let one = |&seed: &u64| -> Result<(u64, SeedOutcome)> {
        log::info!("seed {seed}");
        Ok((seed, run_seed(cfg, &env, truth.as_ref(), &cps, seed)?))
    };
    let outcomes: Vec<(u64, SeedOutcome)> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| ModalError::Parameter(format!("thread pool: {e}")))?;
        pool.install(|| seeds.par_iter().map(one).collect::<Result<Vec<_>>>())?
    } else {
        seeds.iter().map(one).collect::<Result<Vec<_>>>()?
    };
    let aggregate = aggregate(cfg, &outcomes, &cps);
    Ok(ExperimentResult {
        config: cfg.clone(),
        truth,
        checkpoints: cps,
        seeds: outcomes,
        aggregate,
    })
}
