//! Modes of conditional reward densities `f(r | X = x)`.
//!
//! Rewards and contexts are stored side by side as points `(r, x)` in
//! `R^{d+1}`. A conditional mode at `x` is the grid value `r ∈ {1/m, …,
//! (m−1)/m}` whose concatenated point `(r, x)` has the smallest k-NN radius
//! against the joint sample.

use serde::{Deserialize, Serialize};

use crate::error::{ModalError, Result};
use crate::knn::{ceil_rational_power, density_from_radius, knn_radius, KnnQuery, SampleSet};
use crate::mode::{slack_level, KChoice, LevelGraph};
use crate::scalar::Scalar;

/// Joint `(reward, context)` observations with rewards in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSampleSet<T> {
    /// Row `i` is `(r_i, x_i1, …, x_id)`.
    joint: SampleSet<T>,
}

impl<T: Scalar> JointSampleSet<T> {
    pub fn new(context_dim: usize) -> Result<Self> {
        if context_dim == 0 {
            return Err(ModalError::param("context dimension must be at least 1"));
        }
        Ok(Self {
            joint: SampleSet::new(context_dim + 1)?,
        })
    }

    pub fn from_pairs<C: AsRef<[T]>>(context_dim: usize, pairs: impl IntoIterator<Item = (T, C)>) -> Result<Self> {
        let mut out = Self::new(context_dim)?;
        for (r, x) in pairs {
            out.push(r, x.as_ref())?;
        }
        Ok(out)
    }

    pub fn push(&mut self, reward: T, context: &[T]) -> Result<()> {
        if context.len() != self.context_dim() {
            return Err(ModalError::Shape {
                expected: self.context_dim(),
                found: context.len(),
            });
        }
        if !(reward >= T::zero() && reward <= T::one()) {
            return Err(ModalError::data(format!("reward {reward} outside [0, 1]")));
        }
        let mut row = Vec::with_capacity(context.len() + 1);
        row.push(reward);
        row.extend_from_slice(context);
        self.joint.push(&row)
    }

    pub fn len(&self) -> usize {
        self.joint.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joint.is_empty()
    }

    pub fn context_dim(&self) -> usize {
        self.joint.dim() - 1
    }

    pub fn reward(&self, i: usize) -> T {
        self.joint.point(i)[0]
    }

    pub fn context(&self, i: usize) -> &[T] {
        &self.joint.point(i)[1..]
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, &[T])> + '_ {
        self.joint.iter().map(|row| (row[0], &row[1..]))
    }

    /// The concatenated points as a sample in `R^{d+1}`.
    pub fn as_joint(&self) -> &SampleSet<T> {
        &self.joint
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionalModeConfig {
    /// Grid resolution; candidate rewards are `1/m, …, (m−1)/m`.
    pub m: usize,
    /// `Auto` resolves to `⌈n^{2α/(2α+d+1)}⌉`.
    pub k: KChoice,
    pub delta: f64,
    /// Additive slack `ε` subtracted from the level-set threshold.
    pub epsilon_level: f64,
    pub p: usize,
    /// Hölder exponent used by the automatic `k`.
    pub alpha: f64,
    /// Constant of `β_k`, as in [`crate::ModeEstimatorConfig`].
    pub beta_coefficient: f64,
    /// Optional per-coordinate multipliers applied to contexts (sample and
    /// query alike) before distances are taken. Off by default.
    pub context_scale: Option<Vec<f64>>,
}

impl Default for ConditionalModeConfig {
    fn default() -> Self {
        Self {
            m: 50,
            k: KChoice::Auto,
            delta: 0.05,
            epsilon_level: 0.0,
            p: 1,
            alpha: 1.0,
            beta_coefficient: 100.0,
            context_scale: None,
        }
    }
}

impl ConditionalModeConfig {
    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = KChoice::Fixed(k);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(ModalError::param(format!("grid resolution m must be at least 2, got {}", self.m)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ModalError::param("delta must lie in (0, 1)"));
        }
        if !(self.epsilon_level >= 0.0) {
            return Err(ModalError::param("epsilon_level must be nonnegative"));
        }
        if self.p == 0 {
            return Err(ModalError::param("p must be at least 1"));
        }
        if !(self.alpha > 0.0) {
            return Err(ModalError::param("alpha must be positive"));
        }
        if !(self.beta_coefficient > 0.0) {
            return Err(ModalError::param("beta_coefficient must be positive"));
        }
        if let Some(scale) = &self.context_scale {
            if scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return Err(ModalError::param("context_scale entries must be finite and positive"));
            }
        }
        Ok(())
    }

    pub fn resolve_k(&self, n: usize, context_dim: usize) -> Result<usize> {
        match self.k {
            KChoice::Auto => {
                let d = context_dim as f64;
                let exponent = 2.0 * self.alpha / (2.0 * self.alpha + d + 1.0);
                // Exact integer ceiling when α makes the exponent a small rational.
                let k = if self.alpha == 1.0 {
                    ceil_rational_power(n, 2, 3 + context_dim as u32)
                } else {
                    (n as f64).powf(exponent).ceil() as usize
                };
                Ok(k.clamp(1, n.max(1)))
            }
            other => other.resolve(n, context_dim + 1),
        }
    }

    /// Grid value `i/m`.
    pub fn grid_value<T: Scalar>(&self, i: usize) -> T {
        T::of_usize(i) / T::of_usize(self.m)
    }
}

struct Query<'a, T: Clone> {
    joint: std::borrow::Cow<'a, SampleSet<T>>,
    context: Vec<T>,
    k: usize,
}

fn prepare<'a, T: Scalar>(
    samples: &'a JointSampleSet<T>,
    x: &[T],
    config: &ConditionalModeConfig,
) -> Result<Query<'a, T>> {
    config.validate()?;
    let d = samples.context_dim();
    if x.len() != d {
        return Err(ModalError::Shape { expected: d, found: x.len() });
    }
    if samples.is_empty() {
        return Err(ModalError::param("cannot estimate a conditional mode from an empty sample"));
    }
    let k = config.resolve_k(samples.len(), d)?;
    match &config.context_scale {
        None => Ok(Query {
            joint: std::borrow::Cow::Borrowed(samples.as_joint()),
            context: x.to_vec(),
            k,
        }),
        Some(scale) => {
            if scale.len() != d {
                return Err(ModalError::Shape { expected: d, found: scale.len() });
            }
            let s: Vec<T> = scale.iter().map(|&v| T::of(v)).collect();
            let mut flat = samples.as_joint().as_flat().to_vec();
            for row in flat.chunks_mut(d + 1) {
                for (c, f) in row[1..].iter_mut().zip(&s) {
                    *c = *c * *f;
                }
            }
            Ok(Query {
                joint: std::borrow::Cow::Owned(SampleSet::from_flat(flat, d + 1)?),
                context: x.iter().zip(&s).map(|(&a, &f)| a * f).collect(),
                k,
            })
        }
    }
}

fn grid_radii<T: Scalar>(q: &Query<'_, T>, config: &ConditionalModeConfig) -> Result<Vec<T>> {
    let mut point = Vec::with_capacity(q.context.len() + 1);
    (1..config.m)
        .map(|i| {
            point.clear();
            point.push(config.grid_value::<T>(i));
            point.extend_from_slice(&q.context);
            knn_radius(&q.joint, &KnnQuery::new(point.clone(), q.k))
        })
        .collect()
}

/// The grid reward minimizing the k-NN radius of `(r, x)`; ties go to the
/// smaller grid value.
pub fn conditional_mode<T: Scalar>(samples: &JointSampleSet<T>, x: &[T], config: &ConditionalModeConfig) -> Result<T> {
    let q = prepare(samples, x, config)?;
    let radii = grid_radii(&q, config)?;
    let mut best = 0;
    for (i, r) in radii.iter().enumerate() {
        if *r < radii[best] {
            best = i;
        }
    }
    Ok(config.grid_value(best + 1))
}

/// Up to `p` grid modes of the conditional density at `x` as
/// `(reward, density)` pairs in decreasing density order.
///
/// Grid points `r₁, r₂` are adjacent when `|r₁ − r₂|` is within both of their
/// k-NN radii; a point enters the graph once its density reaches
/// `λ − β_k λ − ε`.
pub fn conditional_p_modes<T: Scalar>(
    samples: &JointSampleSet<T>,
    x: &[T],
    config: &ConditionalModeConfig,
) -> Result<Vec<(T, T)>> {
    let q = prepare(samples, x, config)?;
    let radii = grid_radii(&q, config)?;
    let n = samples.len();
    let joint_dim = samples.context_dim() + 1;
    let density: Vec<T> = radii
        .iter()
        .map(|&r| density_from_radius(q.k, n, joint_dim, r))
        .collect();
    let grid = SampleSet::from_scalars((1..config.m).map(|i| config.grid_value::<T>(i)).collect());
    let mut order: Vec<usize> = (0..radii.len()).collect();
    // Stable sort keeps smaller grid values first among equal radii.
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    let beta = config.beta_coefficient * (1.0 / config.delta).ln() * (n as f64).ln().sqrt() / (q.k as f64).sqrt();

    let mut graph = LevelGraph::new(&grid, &radii);
    let mut next = 0;
    let mut seeds: Vec<usize> = Vec::new();
    for &i in &order {
        let level = slack_level(density[i], beta, config.epsilon_level);
        while next < order.len() && density[order[next]] >= level {
            graph.insert(order[next]);
            next += 1;
        }
        if seeds.iter().all(|&s| !graph.connected(i, s)) {
            seeds.push(i);
            if seeds.len() == config.p {
                break;
            }
        }
    }
    Ok(seeds.into_iter().map(|i| (config.grid_value(i + 1), density[i])).collect())
}
