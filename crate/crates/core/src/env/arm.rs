use rand::Rng;
use rand_distr::{Distribution, Normal as NormalSampler, Triangular as TriangularSampler};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal, Triangular, Uniform};

use crate::error::{ModalError, Result};
use crate::rng::SimRng;

/// One-dimensional building block of a mixture component, supported in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Base {
    /// Normal restricted to `[0, 1]` and renormalized.
    TruncatedNormal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
    Triangular { low: f64, mode: f64, high: f64 },
}

impl Base {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Base::TruncatedNormal { mean, sd } => (0.0..=1.0).contains(&mean) && sd > 0.0 && sd.is_finite(),
            Base::Uniform { low, high } => 0.0 <= low && low < high && high <= 1.0,
            Base::Triangular { low, mode, high } => 0.0 <= low && low <= mode && mode <= high && high <= 1.0 && low < high,
        };
        if ok {
            Ok(())
        } else {
            Err(ModalError::Validation(format!("invalid base density {self:?}")))
        }
    }

    /// Location of the density maximum; `None` for the flat uniform.
    pub fn peak(&self) -> Option<f64> {
        match *self {
            Base::TruncatedNormal { mean, .. } => Some(mean),
            Base::Uniform { .. } => None,
            Base::Triangular { mode, .. } => Some(mode),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match *self {
            Base::TruncatedNormal { mean, sd } => {
                let n = Normal::new(mean, sd).expect("validated");
                n.pdf(x) / (n.cdf(1.0) - n.cdf(0.0))
            }
            Base::Uniform { low, high } => {
                if (low..=high).contains(&x) {
                    1.0 / (high - low)
                } else {
                    0.0
                }
            }
            Base::Triangular { low, mode, high } => Triangular::new(low, high, mode).expect("validated").pdf(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        match *self {
            Base::TruncatedNormal { mean, sd } => {
                let n = Normal::new(mean, sd).expect("validated");
                let lo = n.cdf(0.0);
                (n.cdf(x) - lo) / (n.cdf(1.0) - lo)
            }
            Base::Uniform { low, high } => Uniform::new(low, high).expect("validated").cdf(x),
            Base::Triangular { low, mode, high } => Triangular::new(low, high, mode).expect("validated").cdf(x),
        }
    }

    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match *self {
            Base::TruncatedNormal { mean, sd } => {
                let n = NormalSampler::new(mean, sd).expect("validated");
                loop {
                    let v = n.sample(rng);
                    if (0.0..=1.0).contains(&v) {
                        return v;
                    }
                }
            }
            Base::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            Base::Triangular { low, mode, high } => TriangularSampler::new(low, high, mode).expect("validated").sample(rng),
        }
    }

    /// Points where the density is not smooth, for piecewise quadrature.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Base::TruncatedNormal { .. } => vec![],
            Base::Uniform { low, high } => vec![low, high],
            Base::Triangular { low, mode, high } => vec![low, mode, high],
        }
    }
}

/// A product density over `[0, 1]^D`, one [`Base`] per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub weight: f64,
    pub axes: Vec<Base>,
}

impl Component {
    pub fn new(weight: f64, axes: Vec<Base>) -> Self {
        Self { weight, axes }
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        self.axes.iter().zip(x).map(|(b, &v)| b.pdf(v)).product()
    }

    pub fn peak(&self) -> Option<Vec<f64>> {
        self.axes.iter().map(Base::peak).collect()
    }
}

/// Noise injected with probability `q`: a uniformly chosen noise point plus
/// uniform jitter of half-width `dispersion` on every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContaminationModel {
    pub q: f64,
    pub noise_points: Vec<Vec<f64>>,
    #[serde(default)]
    pub dispersion: f64,
}

impl ContaminationModel {
    fn validate(&self, dim: usize) -> Result<()> {
        if !(0.0..1.0).contains(&self.q) {
            return Err(ModalError::Validation(format!("contamination probability {} outside [0, 1)", self.q)));
        }
        if !(self.dispersion >= 0.0) {
            return Err(ModalError::Validation("dispersion must be nonnegative".into()));
        }
        if self.q > 0.0 && self.noise_points.is_empty() {
            return Err(ModalError::Validation("contamination with q > 0 needs noise points".into()));
        }
        for p in &self.noise_points {
            if p.len() != dim {
                return Err(ModalError::Shape { expected: dim, found: p.len() });
            }
            if p.iter().any(|&v| v - self.dispersion < 0.0 || v + self.dispersion > 1.0) {
                return Err(ModalError::Validation(format!(
                    "noise point {p:?} with dispersion {} leaves the unit box",
                    self.dispersion
                )));
            }
        }
        Ok(())
    }

    /// Density of the noise draw, excluding the factor `q`. Infinite on a
    /// zero-dispersion atom.
    fn pdf(&self, x: &[f64]) -> f64 {
        let share = 1.0 / self.noise_points.len() as f64;
        let d = self.dispersion;
        self.noise_points
            .iter()
            .map(|p| {
                let inside = p.iter().zip(x).all(|(&c, &v)| (v - c).abs() <= d);
                if !inside {
                    0.0
                } else if d == 0.0 {
                    f64::INFINITY
                } else {
                    share / (2.0 * d).powi(x.len() as i32)
                }
            })
            .sum()
    }

    fn cdf(&self, x: f64) -> f64 {
        let share = 1.0 / self.noise_points.len() as f64;
        let d = self.dispersion;
        self.noise_points
            .iter()
            .map(|p| {
                let c = p[0];
                let frac = if d == 0.0 {
                    if x >= c { 1.0 } else { 0.0 }
                } else {
                    ((x - (c - d)) / (2.0 * d)).clamp(0.0, 1.0)
                };
                share * frac
            })
            .sum()
    }

    fn sample(&self, rng: &mut SimRng) -> Vec<f64> {
        let p = &self.noise_points[rng.random_range(0..self.noise_points.len())];
        p.iter()
            .map(|&c| {
                if self.dispersion == 0.0 {
                    c
                } else {
                    c + self.dispersion * (2.0 * rng.random::<f64>() - 1.0)
                }
            })
            .collect()
    }
}

/// Reward density of one arm: a finite mixture of product components on
/// `[0, 1]^D`, optionally contaminated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmDistribution {
    pub components: Vec<Component>,
    #[serde(default)]
    pub contamination: Option<ContaminationModel>,
}

impl ArmDistribution {
    pub fn new(components: Vec<Component>) -> Self {
        Self {
            components,
            contamination: None,
        }
    }

    pub fn truncated_normal(mean: f64, sd: f64) -> Self {
        Self::new(vec![Component::new(1.0, vec![Base::TruncatedNormal { mean, sd }])])
    }

    /// One-dimensional mixture from `(weight, base)` pairs.
    pub fn mixture(parts: Vec<(f64, Base)>) -> Self {
        Self::new(parts.into_iter().map(|(w, b)| Component::new(w, vec![b])).collect())
    }

    pub fn with_contamination(mut self, model: ContaminationModel) -> Self {
        self.contamination = Some(model);
        self
    }

    pub fn dimension(&self) -> usize {
        self.components.first().map_or(0, |c| c.axes.len())
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(ModalError::Validation("arm needs at least one component".into()));
        }
        let dim = self.dimension();
        if dim == 0 {
            return Err(ModalError::Validation("components need at least one axis".into()));
        }
        let mut total = 0.0;
        for c in &self.components {
            if c.axes.len() != dim {
                return Err(ModalError::Shape { expected: dim, found: c.axes.len() });
            }
            if !(c.weight > 0.0) {
                return Err(ModalError::Validation(format!("component weight {} must be positive", c.weight)));
            }
            total += c.weight;
            for b in &c.axes {
                b.validate()?;
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(ModalError::Validation(format!("component weights sum to {total}, not 1")));
        }
        if let Some(m) = &self.contamination {
            m.validate(dim)?;
        }
        Ok(())
    }

    /// Rejects mixtures with two distinct component peaks closer than `tol`;
    /// such peaks merge into one flat-topped mode rather than two separated
    /// ones with negative-definite Hessians.
    pub fn check_separated(&self, tol: f64) -> Result<()> {
        let peaks: Vec<Vec<f64>> = self.components.iter().filter_map(Component::peak).collect();
        for (i, a) in peaks.iter().enumerate() {
            for b in &peaks[i + 1..] {
                let d = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                if d > 0.0 && d < tol {
                    return Err(ModalError::Validation(format!(
                        "component peaks {a:?} and {b:?} are {d:.4} apart, below the separation tolerance {tol}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Density of the uncontaminated mixture.
    pub fn clean_pdf(&self, x: &[f64]) -> f64 {
        self.components.iter().map(|c| c.weight * c.pdf(x)).sum()
    }

    /// Density of the sampling distribution including contamination.
    pub fn pdf(&self, x: &[f64]) -> f64 {
        match &self.contamination {
            Some(m) if m.q > 0.0 => (1.0 - m.q) * self.clean_pdf(x) + m.q * m.pdf(x),
            _ => self.clean_pdf(x),
        }
    }

    /// Distribution function of the sampling distribution; one-dimensional
    /// arms only.
    pub fn cdf(&self, x: f64) -> f64 {
        let clean: f64 = self.components.iter().map(|c| c.weight * c.axes[0].cdf(x)).sum();
        match &self.contamination {
            Some(m) if m.q > 0.0 => (1.0 - m.q) * clean + m.q * m.cdf(x),
            _ => clean,
        }
    }

    pub fn sample(&self, rng: &mut SimRng) -> Vec<f64> {
        if let Some(m) = &self.contamination {
            if m.q > 0.0 && rng.random::<f64>() < m.q {
                return m.sample(rng);
            }
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = &self.components[self.components.len() - 1];
        for c in &self.components {
            acc += c.weight;
            if u < acc {
                chosen = c;
                break;
            }
        }
        chosen.axes.iter().map(|b| b.sample(rng)).collect()
    }

    /// Axis-0 non-smooth points of the mixture and noise, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = vec![0.0, 1.0];
        for c in &self.components {
            out.extend(c.axes[0].breakpoints());
        }
        if let Some(m) = &self.contamination {
            for p in &m.noise_points {
                out.push(p[0] - m.dispersion);
                out.push(p[0] + m.dispersion);
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Kolmogorov–Smirnov distance between an empirical sample and a CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
