//! Mode estimation from i.i.d. samples.
//!
//! The basic estimator returns the sample point with the smallest k-NN radius.
//! [`estimate_p_modes`] walks points in decreasing density and collects
//! level-set components of the k-NN graph, recovering several local maxima.
//! [`private_mode`] releases the estimate through the Gaussian mechanism and
//! [`measure_robustness`] compares estimates before and after an adversary
//! inserts points.

use std::cmp::Ordering;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ModalError, Result};
use crate::knn::{all_knn_radii, default_k, density_from_radius, distance, lex_cmp, SampleSet};
use crate::scalar::Scalar;

/// Neighbor count: fixed, or `⌈n^{4/(4+D)}⌉` for the sample at hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KChoice {
    #[default]
    Auto,
    Fixed(usize),
}

impl KChoice {
    pub fn resolve(self, n: usize, dim: usize) -> Result<usize> {
        match self {
            KChoice::Auto => Ok(default_k(n.max(1), dim)),
            KChoice::Fixed(0) => Err(ModalError::param("k must be at least 1")),
            KChoice::Fixed(k) if k > n => Err(ModalError::param(format!(
                "k = {k} exceeds the number of sample points n = {n}"
            ))),
            KChoice::Fixed(k) => Ok(k),
        }
    }
}

impl fmt::Display for KChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KChoice::Auto => f.write_str("auto"),
            KChoice::Fixed(k) => write!(f, "{k}"),
        }
    }
}

impl std::str::FromStr for KChoice {
    type Err = ModalError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(KChoice::Auto);
        }
        s.parse::<usize>()
            .map(KChoice::Fixed)
            .map_err(|_| ModalError::param(format!("k must be 'auto' or a positive integer, got '{s}'")))
    }
}

impl Serialize for KChoice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            KChoice::Auto => s.serialize_str("auto"),
            KChoice::Fixed(k) => s.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for KChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(k) => Ok(KChoice::Fixed(k as usize)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Settings shared by the mode estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModeEstimatorConfig {
    pub k: KChoice,
    /// Confidence parameter in (0, 1); enters the level-set slack `β_k`.
    pub delta: f64,
    /// Number of highest-density modes sought.
    pub p: usize,
    /// Constant in `β_k = c · log(1/δ) · √(log n) / √k`. With desk-scale `n`
    /// the default of 100 gives `β_k ≥ 1`, which merges every point into one
    /// component; multimodal work wants values around 0.5–1.
    pub beta_coefficient: f64,
    /// Below this many samples the estimate is flagged as unreliable.
    pub min_samples: usize,
    /// Constant `C` of the reported robustness bound.
    pub bound_constant: f64,
}

impl Default for ModeEstimatorConfig {
    fn default() -> Self {
        Self {
            k: KChoice::Auto,
            delta: 0.05,
            p: 1,
            beta_coefficient: 100.0,
            min_samples: 50,
            bound_constant: 1.0,
        }
    }
}

impl ModeEstimatorConfig {
    pub fn with_k(mut self, k: usize) -> Self {
        self.k = KChoice::Fixed(k);
        self
    }

    pub fn with_p(mut self, p: usize) -> Self {
        self.p = p;
        self
    }

    pub fn with_beta_coefficient(mut self, c: f64) -> Self {
        self.beta_coefficient = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ModalError::param(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.p == 0 {
            return Err(ModalError::param("p must be at least 1"));
        }
        if !(self.beta_coefficient > 0.0) {
            return Err(ModalError::param("beta_coefficient must be positive"));
        }
        if !(self.bound_constant > 0.0) {
            return Err(ModalError::param("bound_constant must be positive"));
        }
        Ok(())
    }

    /// `β_k` for a sample of size `n`.
    pub fn beta(&self, n: usize, k: usize) -> f64 {
        self.beta_coefficient * (1.0 / self.delta).ln() * (n as f64).ln().sqrt() / (k as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEstimate<T> {
    /// One of the input sample points.
    pub location: Vec<T>,
    /// k-NN density at `location`; `+∞` when `k` points coincide there.
    pub density_value: T,
    pub k_used: usize,
    pub n_used: usize,
    /// The sample was smaller than `min_samples`.
    pub below_min_samples: bool,
}

struct Prepared<T> {
    k: usize,
    radii: Vec<T>,
}

fn prepare<T: Scalar>(samples: &SampleSet<T>, config: &ModeEstimatorConfig) -> Result<Prepared<T>> {
    config.validate()?;
    if samples.is_empty() {
        return Err(ModalError::param("cannot estimate a mode from an empty sample"));
    }
    let k = config.k.resolve(samples.len(), samples.dim())?;
    let radii = all_knn_radii(samples, k)?;
    Ok(Prepared { k, radii })
}

fn make_estimate<T: Scalar>(
    samples: &SampleSet<T>,
    config: &ModeEstimatorConfig,
    k: usize,
    idx: usize,
    radius: T,
) -> ModeEstimate<T> {
    ModeEstimate {
        location: samples.point(idx).to_vec(),
        density_value: density_from_radius(k, samples.len(), samples.dim(), radius),
        k_used: k,
        n_used: samples.len(),
        below_min_samples: samples.len() < config.min_samples,
    }
}

/// Order by radius, then lexicographically by location.
fn rank<T: Scalar>(samples: &SampleSet<T>, radii: &[T], a: usize, b: usize) -> Ordering {
    radii[a]
        .total_cmp(&radii[b])
        .then_with(|| lex_cmp(samples.point(a), samples.point(b)))
}

/// The sample point minimizing the k-NN radius; ties go to the
/// lexicographically smallest point.
pub fn estimate_mode<T: Scalar>(samples: &SampleSet<T>, config: &ModeEstimatorConfig) -> Result<ModeEstimate<T>> {
    let Prepared { k, radii } = prepare(samples, config)?;
    let best = (0..samples.len())
        .min_by(|&a, &b| rank(samples, &radii, a, b))
        .expect("nonempty sample");
    Ok(make_estimate(samples, config, k, best, radii[best]))
}

struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// `λ − β λ`, treating an infinite `λ` as infinite unless `β ≥ 1`.
pub(crate) fn slack_level<T: Scalar>(lambda: T, beta: f64, epsilon: f64) -> T {
    let beta = T::of(beta);
    let eps = T::of(epsilon);
    if lambda.is_infinite() {
        return if beta < T::one() { T::infinity() } else { T::neg_infinity() };
    }
    lambda - beta * lambda - eps
}

/// Graph on a vertex set revealed in decreasing density order, with an edge
/// between points whose distance is within both k-NN radii. Vertices are
/// merged through union-find as they enter.
pub(crate) struct LevelGraph<'a, T: Scalar> {
    samples: &'a SampleSet<T>,
    radii: &'a [T],
    sets: DisjointSets,
    inserted: Vec<bool>,
    /// 1-D only: sample indices sorted by value, and each index's slot in it.
    line: Option<(Vec<usize>, Vec<usize>)>,
    members: Vec<usize>,
}

impl<'a, T: Scalar> LevelGraph<'a, T> {
    pub(crate) fn new(samples: &'a SampleSet<T>, radii: &'a [T]) -> Self {
        let n = samples.len();
        let line = (samples.dim() == 1).then(|| {
            let flat = samples.as_flat();
            let mut sorted: Vec<usize> = (0..n).collect();
            sorted.sort_by(|&a, &b| flat[a].total_cmp(&flat[b]));
            let mut slot = vec![0; n];
            for (pos, &i) in sorted.iter().enumerate() {
                slot[i] = pos;
            }
            (sorted, slot)
        });
        Self {
            samples,
            radii,
            sets: DisjointSets::new(n),
            inserted: vec![false; n],
            line,
            members: Vec::new(),
        }
    }

    fn try_link(&mut self, v: usize, u: usize) -> bool {
        let d = distance(self.samples.point(v), self.samples.point(u));
        if d > self.radii[v] {
            return false;
        }
        if self.inserted[u] && d <= self.radii[u] {
            self.sets.union(v, u);
        }
        true
    }

    pub(crate) fn insert(&mut self, v: usize) {
        if self.inserted[v] {
            return;
        }
        self.inserted[v] = true;
        if let Some((sorted, slot)) = self.line.take() {
            let pos = slot[v];
            for &u in sorted[..pos].iter().rev() {
                if !self.try_link(v, u) {
                    break;
                }
            }
            for &u in &sorted[pos + 1..] {
                if !self.try_link(v, u) {
                    break;
                }
            }
            self.line = Some((sorted, slot));
        } else {
            for i in 0..self.members.len() {
                let u = self.members[i];
                self.try_link(v, u);
            }
        }
        self.members.push(v);
    }

    pub(crate) fn connected(&mut self, a: usize, b: usize) -> bool {
        self.sets.find(a) == self.sets.find(b)
    }
}

/// Up to `p` local modes, one per disjoint level-set component, in the order
/// they were discovered (decreasing estimated density).
///
/// Fewer than `p` entries come back when the walk runs out of points before
/// finding `p` separated components. With `p = 1` the single entry equals
/// [`estimate_mode`].
pub fn estimate_p_modes<T: Scalar>(
    samples: &SampleSet<T>,
    config: &ModeEstimatorConfig,
) -> Result<Vec<ModeEstimate<T>>> {
    let Prepared { k, radii } = prepare(samples, config)?;
    let n = samples.len();
    let dim = samples.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| rank(samples, &radii, a, b));
    let density: Vec<T> = radii.iter().map(|&r| density_from_radius(k, n, dim, r)).collect();
    let beta = config.beta(n, k);

    let mut graph = LevelGraph::new(samples, &radii);
    let mut next = 0usize;
    let mut seeds: Vec<usize> = Vec::new();
    for &i in &order {
        let level = slack_level(density[i], beta, 0.0);
        while next < n && density[order[next]] >= level {
            graph.insert(order[next]);
            next += 1;
        }
        // A previously collected component lies inside the current component
        // of `i` exactly when its seed is connected to `i`.
        if seeds.iter().all(|&s| !graph.connected(i, s)) {
            seeds.push(i);
            if seeds.len() == config.p {
                break;
            }
        }
    }
    Ok(seeds
        .into_iter()
        .map(|i| make_estimate(samples, config, k, i, radii[i]))
        .collect())
}

/// The lexicographically smallest location among the first `min(p, len)` modes.
pub fn p_mode_value<T: Scalar>(modes: &[ModeEstimate<T>], p: usize) -> Result<Vec<T>> {
    if modes.is_empty() {
        return Err(ModalError::param("p-mode of an empty mode list"));
    }
    if p == 0 {
        return Err(ModalError::param("p must be at least 1"));
    }
    let best = modes[..p.min(modes.len())]
        .iter()
        .min_by(|a, b| lex_cmp(&a.location, &b.location))
        .expect("nonempty prefix");
    Ok(best.location.clone())
}

/// Parameters of the Gaussian release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta_privacy: f64,
    /// Explicit noise scale; `None` derives it through [`dp_sigma`].
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default = "one")]
    pub calibration_constant: f64,
}

fn one() -> f64 {
    1.0
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta_privacy: f64) -> Self {
        Self {
            epsilon,
            delta_privacy,
            sigma: None,
            calibration_constant: 1.0,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = Some(sigma);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(ModalError::param("epsilon must be positive"));
        }
        if !(self.delta_privacy > 0.0 && self.delta_privacy < 1.0) {
            return Err(ModalError::param("privacy delta must lie in (0, 1)"));
        }
        if let Some(s) = self.sigma {
            if !(s >= 0.0) {
                return Err(ModalError::param("sigma must be nonnegative"));
            }
        }
        Ok(())
    }

    /// Noise scale to use for a sample of size `n` with neighbor count `k`.
    pub fn resolve_sigma(&self, n: usize, k: usize) -> Result<f64> {
        self.validate()?;
        match self.sigma {
            Some(s) => Ok(s),
            None => dp_sigma(n as f64, k as f64, self, self.calibration_constant),
        }
    }
}

/// `C · log(2/δ) · (log n)^{1/4} · k^{1/4} / ε`.
///
/// `n` and `k` are taken as reals so the formula can be evaluated at
/// non-integer points; they must satisfy `n ≥ k ≥ 1`.
pub fn dp_sigma(n: f64, k: f64, privacy: &PrivacyParams, calibration_constant: f64) -> Result<f64> {
    privacy.validate()?;
    if !(k >= 1.0 && n >= k) {
        return Err(ModalError::param(format!("dp_sigma needs n >= k >= 1, got n = {n}, k = {k}")));
    }
    if !(calibration_constant > 0.0) {
        return Err(ModalError::param("calibration constant must be positive"));
    }
    Ok(calibration_constant
        * (2.0 / privacy.delta_privacy).ln()
        * n.ln().powf(0.25)
        * k.powf(0.25)
        / privacy.epsilon)
}

/// Mode estimate plus i.i.d. `N(0, σ²)` noise on each coordinate.
///
/// Noise comes from a ChaCha8 generator seeded with `rng_seed` and the
/// ziggurat standard normal of `rand_distr`, so a fixed seed reproduces the
/// output bit for bit.
pub fn private_mode<T: Scalar>(
    samples: &SampleSet<T>,
    config: &ModeEstimatorConfig,
    privacy: &PrivacyParams,
    rng_seed: u64,
) -> Result<Vec<T>> {
    let estimate = estimate_mode(samples, config)?;
    let sigma = privacy.resolve_sigma(estimate.n_used, estimate.k_used)?;
    Ok(add_gaussian_noise(&estimate.location, sigma, rng_seed))
}

pub(crate) fn add_gaussian_noise<T: Scalar>(location: &[T], sigma: f64, rng_seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    location
        .iter()
        .map(|&x| {
            let z: f64 = rng.sample(StandardNormal);
            x + T::of(sigma * z)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationReport<T> {
    pub clean_estimate: ModeEstimate<T>,
    pub contaminated_estimate: ModeEstimate<T>,
    /// Euclidean distance between the two locations.
    pub displacement: T,
    /// Number of inserted points.
    pub ell: usize,
    /// `C √(log(1/δ)) (log n)^{1/4} (k − ℓ)^{−1/4}`; infinite when `ℓ ≥ k`.
    pub theoretical_bound: f64,
}

/// Estimate on the clean sample and on the sample with the adversarial points
/// appended, using the same `k` for both.
///
/// Fails when `ℓ ≥ k`: an adversary holding `k` points can stack them anywhere
/// and create a mode of zero radius arbitrarily far from the true one.
pub fn measure_robustness<T: Scalar>(
    samples: &SampleSet<T>,
    adversarial_points: &SampleSet<T>,
    config: &ModeEstimatorConfig,
) -> Result<ContaminationReport<T>> {
    robustness_impl(samples, adversarial_points, config, true)
}

/// [`measure_robustness`] without the `ℓ < k` guard, for demonstrating what
/// goes wrong when it is violated.
pub fn measure_robustness_unguarded<T: Scalar>(
    samples: &SampleSet<T>,
    adversarial_points: &SampleSet<T>,
    config: &ModeEstimatorConfig,
) -> Result<ContaminationReport<T>> {
    robustness_impl(samples, adversarial_points, config, false)
}

fn robustness_impl<T: Scalar>(
    samples: &SampleSet<T>,
    adversarial_points: &SampleSet<T>,
    config: &ModeEstimatorConfig,
    guarded: bool,
) -> Result<ContaminationReport<T>> {
    config.validate()?;
    if adversarial_points.dim() != samples.dim() {
        return Err(ModalError::Shape {
            expected: samples.dim(),
            found: adversarial_points.dim(),
        });
    }
    if samples.is_empty() {
        return Err(ModalError::param("cannot estimate a mode from an empty sample"));
    }
    let n = samples.len();
    let k = config.k.resolve(n, samples.dim())?;
    let ell = adversarial_points.len();
    if guarded && ell >= k {
        return Err(ModalError::param(format!(
            "{ell} adversarial points with k = {k}: robustness requires ell < k, otherwise \
             the adversary can stack k points anywhere and create an arbitrary mode"
        )));
    }
    let fixed = ModeEstimatorConfig {
        k: crate::mode::KChoice::Fixed(k),
        ..config.clone()
    };
    let clean_estimate = estimate_mode(samples, &fixed)?;
    let mut union = samples.clone();
    union.extend(adversarial_points)?;
    let contaminated_estimate = estimate_mode(&union, &fixed)?;
    let displacement = distance(&clean_estimate.location, &contaminated_estimate.location);
    let theoretical_bound = if ell < k {
        config.bound_constant
            * (1.0 / config.delta).ln().sqrt()
            * (n as f64).ln().powf(0.25)
            * ((k - ell) as f64).powf(-0.25)
    } else {
        f64::INFINITY
    };
    Ok(ContaminationReport {
        clean_estimate,
        contaminated_estimate,
        displacement,
        ell,
        theoretical_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand_distr::{Distribution, Normal};

    fn line(v: &[f64]) -> SampleSet<f64> {
        SampleSet::from_scalars(v.to_vec())
    }

    fn truncated_normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64, n: usize) -> Vec<f64> {
        let dist = Normal::new(mean, sd).unwrap();
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let x = dist.sample(rng);
            if (0.0..=1.0).contains(&x) {
                out.push(x);
            }
        }
        out
    }

    /// Argmin of the k-th smallest distance via a full sort per point.
    fn brute_mode(points: &[Vec<f64>], k: usize) -> Vec<f64> {
        let mut best: Option<(f64, &Vec<f64>)> = None;
        for p in points {
            let mut d: Vec<f64> = points
                .iter()
                .map(|q| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let r = d[k - 1];
            let better = match best {
                None => true,
                Some((br, bp)) => r < br || (r == br && p.partial_cmp(bp) == Some(Ordering::Less)),
            };
            if better {
                best = Some((r, p));
            }
        }
        best.unwrap().1.clone()
    }

    #[test]
    fn worked_example() {
        let s = line(&[0.1, 0.5, 0.52, 0.54, 0.9]);
        let est = estimate_mode(&s, &ModeEstimatorConfig::default().with_k(3)).unwrap();
        assert_eq!(est.location, vec![0.52]);
        assert_eq!(est.k_used, 3);
        assert_eq!(est.n_used, 5);
        assert!(est.below_min_samples);
        let rows: Vec<Vec<f64>> = s.iter().map(|p| p.to_vec()).collect();
        assert_eq!(brute_mode(&rows, 3), vec![0.52]);
    }

    #[test]
    fn singleton_and_empty() {
        let est = estimate_mode(&line(&[0.7]), &ModeEstimatorConfig::default().with_k(1)).unwrap();
        assert_eq!(est.location, vec![0.7]);
        assert!(matches!(
            estimate_mode(&line(&[]), &ModeEstimatorConfig::default()),
            Err(ModalError::Parameter(_))
        ));
        assert!(estimate_mode(&line(&[0.1, 0.2]), &ModeEstimatorConfig::default().with_k(3)).is_err());
    }

    #[test]
    fn duplicates_win_immediately() {
        let s = line(&[0.1, 0.4, 0.4, 0.4, 0.41, 0.42, 0.43]);
        let est = estimate_mode(&s, &ModeEstimatorConfig::default().with_k(3)).unwrap();
        assert_eq!(est.location, vec![0.4]);
        assert!(est.density_value.is_infinite());
    }

    #[test]
    fn ties_resolve_to_smallest_location() {
        let s = line(&[0.75, 0.5, 0.25, 0.0]);
        let est = estimate_mode(&s, &ModeEstimatorConfig::default().with_k(2)).unwrap();
        assert_eq!(est.location, vec![0.0]);
    }

    #[test]
    fn truncated_normal_mode_is_accurate() {
        let mut hits = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = line(&truncated_normal(&mut rng, 0.5, 0.1, 100_000));
            let est = estimate_mode(&s, &ModeEstimatorConfig::default()).unwrap();
            if (est.location[0] - 0.5).abs() <= 0.03 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "hits = {hits}");
    }

    #[test]
    fn two_dimensional_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs = truncated_normal(&mut rng, 0.3, 0.05, 2000);
        let ys = truncated_normal(&mut rng, 0.7, 0.05, 2000);
        let s = SampleSet::from_points(2, xs.iter().zip(&ys).map(|(x, y)| [*x, *y])).unwrap();
        let est = estimate_mode(&s, &ModeEstimatorConfig::default()).unwrap();
        assert!((est.location[0] - 0.3).abs() < 0.05 && (est.location[1] - 0.7).abs() < 0.05);
    }

    fn bimodal(seed: u64, n: usize) -> SampleSet<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let (m, sd) = if rng.random::<f64>() < 0.6 { (0.25, 0.05) } else { (0.75, 0.05) };
            out.extend(truncated_normal(&mut rng, m, sd, 1));
        }
        line(&out)
    }

    fn mixture_density(x: f64) -> f64 {
        let phi = |x: f64, m: f64, s: f64| (-(x - m).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
        0.6 * phi(x, 0.25, 0.05) + 0.4 * phi(x, 0.75, 0.05)
    }

    #[test]
    fn bimodal_p_modes() {
        // The fine-grid oracle puts the taller mode near 0.25.
        let grid_argmax = (0..=10_000)
            .map(|i| i as f64 / 10_000.0)
            .max_by(|a, b| mixture_density(*a).partial_cmp(&mixture_density(*b)).unwrap())
            .unwrap();
        assert!((grid_argmax - 0.25).abs() < 1e-3);

        let s = bimodal(5, 20_000);
        let cfg = ModeEstimatorConfig::default().with_p(2).with_beta_coefficient(1.0);
        let modes = estimate_p_modes(&s, &cfg).unwrap();
        assert_eq!(modes.len(), 2);
        assert!((modes[0].location[0] - 0.25).abs() < 0.05, "{modes:?}");
        assert!((modes[1].location[0] - 0.75).abs() < 0.05, "{modes:?}");
        assert!(modes[0].density_value >= modes[1].density_value);
        assert_eq!(p_mode_value(&modes, 2).unwrap(), modes[0].location);

        let many = estimate_p_modes(&s, &cfg.clone().with_p(5)).unwrap();
        assert!(many.len() <= 2, "found {} components", many.len());
        assert_eq!(many[..2], modes[..]);
    }

    #[test]
    fn large_beta_merges_everything() {
        // Overlapping bumps: with β_k ≥ 1 the whole k-NN graph enters at once
        // and it is connected, so a single component is reported.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut v = truncated_normal(&mut rng, 0.4, 0.08, 2500);
        v.extend(truncated_normal(&mut rng, 0.6, 0.08, 2500));
        let s = line(&v);
        let cfg = ModeEstimatorConfig::default().with_p(3);
        assert!(cfg.beta(s.len(), default_k(s.len(), 1)) >= 1.0);
        assert_eq!(estimate_p_modes(&s, &cfg).unwrap().len(), 1);
    }

    #[test]
    fn p_mode_value_examples() {
        let m = |x: f64| ModeEstimate {
            location: vec![x],
            density_value: 1.0,
            k_used: 1,
            n_used: 1,
            below_min_samples: true,
        };
        let modes = vec![m(0.75), m(0.25)];
        assert_eq!(p_mode_value(&modes, 1).unwrap(), vec![0.75]);
        assert_eq!(p_mode_value(&modes, 2).unwrap(), vec![0.25]);
        assert_eq!(p_mode_value(&[m(0.5)], 3).unwrap(), vec![0.5]);
        assert!(p_mode_value::<f64>(&[], 1).is_err());
    }

    #[test]
    fn dp_sigma_values() {
        let unit = PrivacyParams::new(1.0, 2.0 / std::f64::consts::E);
        assert_relative_eq!(dp_sigma(std::f64::consts::E, 1.0, &unit, 1.0).unwrap(), 1.0, epsilon = 1e-14);
        let p = PrivacyParams::new(0.5, 0.05);
        // log(40) · (log 1e4)^{1/4} · 1000^{1/4} · 2, evaluated at 40 digits.
        assert_relative_eq!(dp_sigma(1e4, 1e3, &p, 1.0).unwrap(), 72.27587850494791, epsilon = 1e-11);
        let doubled = PrivacyParams::new(1.0, 0.05);
        assert_relative_eq!(
            dp_sigma(1e4, 1e3, &doubled, 1.0).unwrap() * 2.0,
            dp_sigma(1e4, 1e3, &p, 1.0).unwrap(),
            epsilon = 1e-12
        );
        assert!(dp_sigma(10.0, 20.0, &p, 1.0).is_err());
        assert!(dp_sigma(10.0, 2.0, &PrivacyParams::new(0.0, 0.05), 1.0).is_err());
    }

    #[test]
    fn private_mode_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = line(&truncated_normal(&mut rng, 0.5, 0.1, 2000));
        let cfg = ModeEstimatorConfig::default();
        let clean = estimate_mode(&s, &cfg).unwrap().location;
        let zero = PrivacyParams::new(1.0, 0.05).with_sigma(0.0);
        assert_eq!(private_mode(&s, &cfg, &zero, 7).unwrap(), clean);
        let p = PrivacyParams::new(1.0, 0.05).with_sigma(0.1);
        let a = private_mode(&s, &cfg, &p, 7).unwrap();
        assert_eq!(a, private_mode(&s, &cfg, &p, 7).unwrap());
        assert_ne!(a, private_mode(&s, &cfg, &p, 8).unwrap());
        // auto sigma goes through dp_sigma
        let auto = PrivacyParams::new(1.0, 0.05);
        assert!(auto.resolve_sigma(2000, 100).unwrap() > 0.0);
    }

    #[test]
    fn robustness_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = line(&truncated_normal(&mut rng, 0.5, 0.1, 1000));
        let cfg = ModeEstimatorConfig::default();
        let none = SampleSet::new(1).unwrap();
        let r = measure_robustness(&s, &none, &cfg).unwrap();
        assert_eq!(r.displacement, 0.0);
        assert_eq!(r.ell, 0);

        let small = ModeEstimatorConfig::default().with_k(5);
        let stack = line(&[0.9; 5]);
        let err = measure_robustness(&s, &stack, &small).unwrap_err();
        assert!(err.to_string().contains("ell < k"));
        let r = measure_robustness_unguarded(&s, &stack, &small).unwrap();
        assert_eq!(r.contaminated_estimate.location, vec![0.9]);
        assert!((r.displacement - 0.4).abs() < 0.05);
        assert!(r.theoretical_bound.is_infinite());
    }

    #[test]
    fn spread_out_insertions_far_away_change_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = line(&truncated_normal(&mut rng, 0.5, 0.05, 3000));
        let cfg = ModeEstimatorConfig::default();
        let clean = estimate_mode(&s, &cfg).unwrap();
        let rk = crate::knn::knn_radius(
            &s,
            &crate::knn::KnnQuery::new(clean.location.clone(), clean.k_used),
        )
        .unwrap();
        // ℓ points spaced 0.05 apart, all farther than 2 r_k from the mode.
        let adv: Vec<f64> = (0..10).map(|i| clean.location[0] + 2.0 * rk + 0.05 + 0.05 * i as f64).collect();
        let adv = line(&adv);
        let r = measure_robustness(&s, &adv, &cfg).unwrap();
        assert_eq!(r.contaminated_estimate.location, clean.location);
    }

    #[test]
    fn f32_estimator() {
        let s = SampleSet::<f32>::from_scalars(vec![0.1, 0.5, 0.52, 0.54, 0.9]);
        let est = estimate_mode(&s, &ModeEstimatorConfig::default().with_k(3)).unwrap();
        assert_eq!(est.location, vec![0.52f32]);
    }

    #[test]
    fn k_choice_serde() {
        #[derive(Deserialize, Serialize)]
        struct W {
            k: KChoice,
        }
        let w: W = serde_json::from_str(r#"{"k":"auto"}"#).unwrap();
        assert_eq!(w.k, KChoice::Auto);
        let w: W = serde_json::from_str(r#"{"k":12}"#).unwrap();
        assert_eq!(w.k, KChoice::Fixed(12));
        assert_eq!(serde_json::to_string(&w).unwrap(), r#"{"k":12}"#);
    }

    proptest! {
        #[test]
        fn mode_matches_brute_force(dim in 1usize..3, raw in prop::collection::vec(0.0f64..1.0, 2..300), kfrac in 0.0f64..1.0) {
            let n = raw.len() / dim;
            prop_assume!(n >= 1);
            let flat: Vec<f64> = raw[..n * dim].iter().map(|v| (v * 40.0).round() / 40.0).collect();
            let s = SampleSet::from_flat(flat.clone(), dim).unwrap();
            let rows: Vec<Vec<f64>> = flat.chunks(dim).map(|c| c.to_vec()).collect();
            let k = 1 + ((n - 1) as f64 * kfrac) as usize;
            let est = estimate_mode(&s, &ModeEstimatorConfig::default().with_k(k)).unwrap();
            prop_assert_eq!(est.location, brute_mode(&rows, k));
        }

        #[test]
        fn p1_equals_estimate_mode(raw in prop::collection::vec(0.0f64..1.0, 1..300), kfrac in 0.0f64..1.0, c in 0.1f64..200.0) {
            let s = line(&raw);
            let k = 1 + ((raw.len() - 1) as f64 * kfrac) as usize;
            let cfg = ModeEstimatorConfig::default().with_k(k).with_beta_coefficient(c);
            let modes = estimate_p_modes(&s, &cfg).unwrap();
            prop_assert_eq!(modes.len(), 1);
            prop_assert_eq!(&modes[0], &estimate_mode(&s, &cfg).unwrap());
        }

        #[test]
        fn permutation_invariant(raw in prop::collection::vec(0.0f64..1.0, 2..200), seed in 0u64..1000) {
            let s = line(&raw);
            let mut shuffled = raw.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let t = line(&shuffled);
            let cfg = ModeEstimatorConfig::default().with_p(3).with_beta_coefficient(0.5);
            prop_assert_eq!(estimate_mode(&s, &cfg).unwrap(), estimate_mode(&t, &cfg).unwrap());
            prop_assert_eq!(estimate_p_modes(&s, &cfg).unwrap(), estimate_p_modes(&t, &cfg).unwrap());
        }

        #[test]
        fn p_modes_are_distinct_components(raw in prop::collection::vec(0.0f64..1.0, 5..200)) {
            let s = line(&raw);
            let cfg = ModeEstimatorConfig::default().with_p(4).with_beta_coefficient(0.3);
            let modes = estimate_p_modes(&s, &cfg).unwrap();
            prop_assert!(!modes.is_empty() && modes.len() <= 4);
            for w in modes.windows(2) {
                prop_assert!(w[0].density_value >= w[1].density_value);
            }
        }
    }
}
