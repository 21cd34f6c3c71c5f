//! Named experiment presets. The mixture parameters are fixed here; they are
//! chosen to show the qualitative effect each experiment is about (a mode
//! ranking that disagrees with the mean ranking, near-tied modes, a
//! multivariate score, a second-mode score) rather than taken from data.

use crate::bandit::{BurnInPolicy, ScoreFunction};
use crate::error::{ModalError, Result};
use crate::experiment::{
    ContextualParams, EnvironmentSpec, ExperimentConfig, Seeds, Strategy, TopMParams, ZoomingParams,
};
use crate::mode::ModeEstimatorConfig;

use super::{ArmDistribution, Base, Component, ContaminationModel, ContextualEnvironment, ContinuumEnvironment};

pub const PRESET_NAMES: [&str; 7] = [
    "fig2_contaminated",
    "fig3_close_modes",
    "fig4_distance_score",
    "appendix_2mode",
    "top_m_five_arms",
    "contextual_crossing",
    "zooming_quadratic",
];

fn normal(mean: f64, sd: f64) -> Base {
    Base::TruncatedNormal { mean, sd }
}

fn base_config(strategy: Strategy, horizon: usize, environment: EnvironmentSpec) -> ExperimentConfig {
    ExperimentConfig {
        name: None,
        strategy,
        horizon,
        delta: 0.05,
        output_dir: None,
        regret_checkpoints: 20,
        svg: true,
        seeds: Seeds { count: 25, base: 0 },
        environment,
        score: ScoreFunction::identity(),
        burn_in: BurnInPolicy::default(),
        estimator: ModeEstimatorConfig::default(),
        top_m: None,
        contextual: None,
        zooming: None,
    }
}

/// Three arms whose top modes rank 0 > 1 > 2. One in five draws is noise:
/// arm 0's noise sits well below its mode, the other arms' noise well above,
/// so the mean ranks arm 1 first while the mode still ranks arm 0 first.
fn fig2() -> ExperimentConfig {
    let arm = |mode: f64, noise: Vec<f64>| {
        ArmDistribution::truncated_normal(mode, 0.03).with_contamination(ContaminationModel {
            q: 0.2,
            noise_points: noise.into_iter().map(|x| vec![x]).collect(),
            dispersion: 0.02,
        })
    };
    let arms = vec![arm(0.7, vec![0.2]), arm(0.6, vec![0.9, 0.95]), arm(0.45, vec![0.9, 0.95])];
    base_config(Strategy::Ucb, 2000, EnvironmentSpec::Finite { arms })
}

/// Top modes 0.50, 0.49, 0.48.
fn fig3() -> ExperimentConfig {
    let arms = [0.50, 0.49, 0.48]
        .iter()
        .map(|&m| ArmDistribution::truncated_normal(m, 0.01))
        .collect();
    let mut cfg = base_config(Strategy::Ucb, 8000, EnvironmentSpec::Finite { arms });
    cfg.burn_in = BurnInPolicy::new(20);
    cfg
}

/// Two-dimensional arms scored by distance from the origin, scaled by
/// `1/√2` so the score stays in `[0, 1]`. Arm 2 has the farthest mode.
fn fig4() -> ExperimentConfig {
    let arm = |x: f64, y: f64| ArmDistribution::new(vec![Component::new(1.0, vec![normal(x, 0.05), normal(y, 0.05)])]);
    let arms = vec![arm(0.5, 0.5), arm(0.7, 0.3), arm(0.75, 0.75)];
    let mut cfg = base_config(Strategy::Ucb, 1000, EnvironmentSpec::Finite { arms });
    cfg.score = ScoreFunction::distance_from_origin().with_affine(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    cfg
}

/// Bimodal arms scored by their 2-mode, the smaller of the two mode
/// locations. Arm 0 has the highest top mode but the lowest 2-mode; arm 2
/// has the highest 2-mode.
fn appendix_2mode() -> ExperimentConfig {
    let arm = |low: f64, high: f64| ArmDistribution::mixture(vec![(0.45, normal(low, 0.04)), (0.55, normal(high, 0.04))]);
    let arms = vec![arm(0.2, 0.85), arm(0.35, 0.7), arm(0.5, 0.8)];
    let mut cfg = base_config(Strategy::Ucb, 2000, EnvironmentSpec::Finite { arms });
    cfg.burn_in = BurnInPolicy::new(40);
    cfg.estimator = ModeEstimatorConfig::default().with_p(2).with_beta_coefficient(0.5);
    cfg
}

fn top_m_five_arms() -> ExperimentConfig {
    let arms = [0.9, 0.75, 0.6, 0.35, 0.15]
        .iter()
        .map(|&m| ArmDistribution::truncated_normal(m, 0.03))
        .collect();
    let mut cfg = base_config(Strategy::TopM, 5000, EnvironmentSpec::Finite { arms });
    cfg.seeds.count = 50;
    cfg.top_m = Some(TopMParams { m: 2, deterministic: false });
    cfg
}

fn contextual_crossing() -> ExperimentConfig {
    let env = ContextualEnvironment::crossing();
    let mut cfg = base_config(
        Strategy::ContextualUniform,
        50_000,
        EnvironmentSpec::Contextual {
            context_dim: env.context_dim,
            arms: env.arms,
        },
    );
    cfg.seeds.count = 5;
    cfg.contextual = Some(ContextualParams::default());
    cfg
}

fn zooming_quadratic() -> ExperimentConfig {
    let z = crate::zooming::ZoomingConfig::new(vec![0.5]);
    let mut cfg = base_config(Strategy::Zooming, z.horizon, EnvironmentSpec::Continuum(ContinuumEnvironment::quadratic()));
    cfg.seeds.count = 100;
    cfg.burn_in = z.burn_in;
    cfg.estimator = z.estimator;
    cfg.zooming = Some(ZoomingParams {
        arms_per_phase: z.arms_per_phase,
        phase_length: z.phase_length,
        initial_radius: z.initial_radius,
        initial_center: z.initial_center,
    });
    cfg
}

/// The preset called `name`.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let mut cfg = match name {
        "fig2_contaminated" => fig2(),
        "fig3_close_modes" => fig3(),
        "fig4_distance_score" => fig4(),
        "appendix_2mode" => appendix_2mode(),
        "top_m_five_arms" => top_m_five_arms(),
        "contextual_crossing" => contextual_crossing(),
        "zooming_quadratic" => zooming_quadratic(),
        _ => {
            return Err(ModalError::param(format!(
                "unknown preset `{name}`; known presets: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    cfg.name = Some(name.to_owned());
    Ok(cfg)
}

/// Every preset, in [`PRESET_NAMES`] order.
pub fn figure_environments() -> Vec<(&'static str, ExperimentConfig)> {
    PRESET_NAMES
        .iter()
        .map(|&n| (n, preset(n).expect("catalogue names are valid")))
        .collect()
}
