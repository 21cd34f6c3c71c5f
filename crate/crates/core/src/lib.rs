//! Nonparametric mode estimation and modal multi-armed bandits.
//!
//! The estimators ([`knn`], [`mode`], [`conditional`]) are generic over the
//! floating point type through [`Scalar`]; the bandit layer, environments and
//! experiment plumbing work in `f64`. Concrete aliases for both precisions are
//! exported at the crate root.

pub mod bandit;
pub mod conditional;
pub mod contextual;
pub mod env;
pub mod error;
pub mod experiment;
pub mod io;
pub mod knn;
pub mod mode;
pub mod rng;
pub mod scalar;
pub mod zooming;

pub use error::{ModalError, Result};
pub use scalar::Scalar;

pub use knn::{default_k, knn_density, knn_radius, unit_ball_volume, KnnQuery, SampleSet};
pub use mode::{
    dp_sigma, estimate_mode, estimate_p_modes, measure_robustness, p_mode_value, private_mode,
    ContaminationReport, KChoice, ModeEstimate, ModeEstimatorConfig, PrivacyParams,
};

pub type SampleSet64 = SampleSet<f64>;
pub type SampleSet32 = SampleSet<f32>;
pub type ModeEstimate64 = ModeEstimate<f64>;
pub type ModeEstimate32 = ModeEstimate<f32>;
pub type ContaminationReport64 = ContaminationReport<f64>;
pub type JointSampleSet64 = conditional::JointSampleSet<f64>;
pub type JointSampleSet32 = conditional::JointSampleSet<f32>;
