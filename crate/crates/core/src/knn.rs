//! k-nearest-neighbor radius and density primitives.
//!
//! Distances are Euclidean and computed in exactly one place
//! ([`squared_distance`]), so every caller sees bit-identical radii whether a
//! query goes through the full scan, the one-dimensional window sweep or the
//! k-d tree.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{ModalError, Result};
use crate::scalar::Scalar;

/// An ordered collection of points in `R^D`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet<T> {
    data: Vec<T>,
    dim: usize,
}

impl<T: Scalar> SampleSet<T> {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(ModalError::param("sample dimension must be at least 1"));
        }
        Ok(Self {
            data: Vec::new(),
            dim,
        })
    }

    pub fn from_flat(data: Vec<T>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(ModalError::param("sample dimension must be at least 1"));
        }
        if data.len() % dim != 0 {
            return Err(ModalError::Shape {
                expected: dim,
                found: data.len() % dim,
            });
        }
        Ok(Self { data, dim })
    }

    /// One-dimensional sample from scalars.
    pub fn from_scalars(values: Vec<T>) -> Self {
        Self {
            data: values,
            dim: 1,
        }
    }

    pub fn from_points<P: AsRef<[T]>>(dim: usize, points: impl IntoIterator<Item = P>) -> Result<Self> {
        let mut set = Self::new(dim)?;
        for p in points {
            set.push(p.as_ref())?;
        }
        Ok(set)
    }

    pub fn push(&mut self, point: &[T]) -> Result<()> {
        if point.len() != self.dim {
            return Err(ModalError::Shape {
                expected: self.dim,
                found: point.len(),
            });
        }
        self.data.extend_from_slice(point);
        Ok(())
    }

    /// Appends every point of `other`.
    pub fn extend(&mut self, other: &SampleSet<T>) -> Result<()> {
        if other.dim != self.dim {
            return Err(ModalError::Shape {
                expected: self.dim,
                found: other.dim,
            });
        }
        self.data.extend_from_slice(&other.data);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[T] {
        &self.data
    }

    /// The first `n` points as a new set.
    pub fn prefix(&self, n: usize) -> SampleSet<T> {
        let n = n.min(self.len());
        SampleSet {
            data: self.data[..n * self.dim].to_vec(),
            dim: self.dim,
        }
    }
}

/// A query point together with the neighbor rank `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnQuery<T> {
    pub point: Vec<T>,
    pub k: usize,
}

impl<T: Scalar> KnnQuery<T> {
    pub fn new(point: Vec<T>, k: usize) -> Self {
        Self { point, k }
    }
}

#[inline]
pub fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        let d = *x - *y;
        acc = acc + d * d;
    }
    acc
}

#[inline]
pub fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    squared_distance(a, b).sqrt()
}

/// Coordinate-wise lexicographic order, the tie-breaker for every argmin/argmax.
pub fn lex_cmp<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 {
        return Err(ModalError::param("k must be at least 1"));
    }
    if k > n {
        return Err(ModalError::param(format!(
            "k = {k} exceeds the number of sample points n = {n}"
        )));
    }
    Ok(())
}

/// Distance from the query point to its k-th nearest sample point.
///
/// A query that coincides with a sample point counts that point as its own
/// nearest neighbor at distance zero.
pub fn knn_radius<T: Scalar>(samples: &SampleSet<T>, query: &KnnQuery<T>) -> Result<T> {
    if query.point.len() != samples.dim() {
        return Err(ModalError::Shape {
            expected: samples.dim(),
            found: query.point.len(),
        });
    }
    check_k(query.k, samples.len())?;
    let mut buf = Vec::with_capacity(samples.len());
    Ok(kth_distance(samples, &query.point, query.k, &mut buf))
}

fn kth_distance<T: Scalar>(samples: &SampleSet<T>, point: &[T], k: usize, buf: &mut Vec<T>) -> T {
    buf.clear();
    buf.extend(samples.iter().map(|p| squared_distance(point, p)));
    let (_, kth, _) = buf.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    kth.sqrt()
}

/// Volume of the unit ball in `R^dim`: `v_0 = 1`, `v_1 = 2`, `v_d = v_{d-2} 2π / d`.
pub fn unit_ball_volume<T: Scalar>(dim: usize) -> T {
    let two_pi = T::of(2.0 * std::f64::consts::PI);
    let (mut v, mut d) = if dim % 2 == 0 {
        (T::one(), 0usize)
    } else {
        (T::of(2.0), 1usize)
    };
    while d < dim {
        d += 2;
        v = v * two_pi / T::of_usize(d);
    }
    v
}

/// `k / (n · v_D · r^D)`; a zero radius yields positive infinity.
pub fn density_from_radius<T: Scalar>(k: usize, n: usize, dim: usize, radius: T) -> T {
    if radius == T::zero() {
        return T::infinity();
    }
    T::of_usize(k) / (T::of_usize(n) * unit_ball_volume::<T>(dim) * radius.powi(dim as i32))
}

/// k-NN density estimate at the query point.
///
/// Returns `+∞` when `k` sample points coincide with the query (zero radius);
/// callers comparing densities must handle that marker.
pub fn knn_density<T: Scalar>(samples: &SampleSet<T>, query: &KnnQuery<T>) -> Result<T> {
    let r = knn_radius(samples, query)?;
    Ok(density_from_radius(query.k, samples.len(), samples.dim(), r))
}

/// k-NN radius of every sample point against its own set, in input order.
pub fn all_knn_radii<T: Scalar>(samples: &SampleSet<T>, k: usize) -> Result<Vec<T>> {
    check_k(k, samples.len())?;
    if samples.dim() == 1 {
        Ok(line_radii(samples.as_flat(), k))
    } else {
        Ok(tree_radii(samples, k))
    }
}

/// Max-heap key for squared distances.
struct Key<T>(T);

impl<T: Scalar> PartialEq for Key<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Key<T> {}

impl<T: Scalar> PartialOrd for Key<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Key<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

const LEAF_SIZE: usize = 16;

enum Node<T> {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: T, left: usize, right: usize },
}

/// Static k-d tree over a sample's point indices.
///
/// Distances are the same [`squared_distance`] used by the linear scan, and a
/// subtree is skipped only when the gap to its splitting plane alone exceeds
/// the current k-th distance, so query results equal the scan's bit for bit.
struct KdTree<'a, T> {
    samples: &'a SampleSet<T>,
    index: Vec<usize>,
    nodes: Vec<Node<T>>,
}

impl<'a, T: Scalar> KdTree<'a, T> {
    fn new(samples: &'a SampleSet<T>) -> Self {
        let mut tree = Self {
            samples,
            index: (0..samples.len()).collect(),
            nodes: Vec::new(),
        };
        tree.build(0, samples.len());
        tree
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let samples = self.samples;
        let axis = (0..samples.dim())
            .max_by(|&a, &b| self.spread(start, end, a).total_cmp(&self.spread(start, end, b)))
            .expect("dim ≥ 1");
        let mid = (start + end) / 2;
        self.index[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            samples.point(a)[axis].total_cmp(&samples.point(b)[axis])
        });
        let value = samples.point(self.index[mid])[axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    fn spread(&self, start: usize, end: usize, axis: usize) -> T {
        let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
        for &i in &self.index[start..end] {
            let v = self.samples.point(i)[axis];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }

    fn kth_squared(&self, p: &[T], k: usize, heap: &mut BinaryHeap<Key<T>>) -> T {
        heap.clear();
        self.visit(0, p, k, heap);
        heap.peek().expect("k ≥ 1").0
    }

    fn visit(&self, node: usize, p: &[T], k: usize, heap: &mut BinaryHeap<Key<T>>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.index[start..end] {
                    let d = squared_distance(p, self.samples.point(i));
                    if heap.len() < k {
                        heap.push(Key(d));
                    } else if d < heap.peek().expect("full heap").0 {
                        heap.pop();
                        heap.push(Key(d));
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                // Points left of the median satisfy x ≤ value and points right
                // of it x ≥ value, so the plane gap bounds both sides.
                let gap = p[axis] - value;
                let (near, far) = if gap <= T::zero() { (left, right) } else { (right, left) };
                self.visit(near, p, k, heap);
                if heap.len() < k || gap * gap <= heap.peek().expect("full heap").0 {
                    self.visit(far, p, k, heap);
                }
            }
        }
    }

    /// Squared distances from `p` to every point with squared distance at
    /// most `limit`, appended to `out`.
    fn within(&self, node: usize, p: &[T], limit: T, out: &mut Vec<T>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.index[start..end] {
                    let d = squared_distance(p, self.samples.point(i));
                    if d <= limit {
                        out.push(d);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let gap = p[axis] - value;
                let (near, far) = if gap <= T::zero() { (left, right) } else { (right, left) };
                self.within(near, p, limit, out);
                if gap * gap <= limit {
                    self.within(far, p, limit, out);
                }
            }
        }
    }
}

/// Exact k-NN radii for `D ≥ 2` through a k-d tree.
///
/// Points are visited in tree order, so consecutive points are close. The
/// triangle inequality `r_k(p) ≤ r_k(q) + |p − q|` for the previous point `q`
/// gives a search radius; every point inside it (with a small margin for
/// rounding) is collected and the k-th smallest squared distance selected.
/// The margin only adds candidates, so the selected value is exact.
fn tree_radii<T: Scalar>(samples: &SampleSet<T>, k: usize) -> Vec<T> {
    let tree = KdTree::new(samples);
    let mut heap = BinaryHeap::with_capacity(k + 1);
    let mut buf = Vec::new();
    let mut out = vec![T::zero(); samples.len()];
    let margin = T::one() + T::of(1e-9);
    let mut prev: Option<(usize, T)> = None;
    for &i in &tree.index {
        let p = samples.point(i);
        let mut found = None;
        if let Some((q, rq)) = prev {
            let bound = rq + distance(p, samples.point(q));
            buf.clear();
            tree.within(0, p, bound * bound * margin, &mut buf);
            if buf.len() >= k {
                let (_, kth, _) = buf.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
                found = Some(kth.sqrt());
            }
        }
        let r = found.unwrap_or_else(|| tree.kth_squared(p, k, &mut heap).sqrt());
        out[i] = r;
        prev = Some((i, r));
    }
    out
}

/// Exact k-NN radii on the line.
///
/// The k nearest neighbors of a point form a contiguous window of the sorted
/// values, so the radius is the minimum over windows containing the point of
/// the larger endpoint distance. That function of the window start is
/// nonincreasing then nondecreasing, which a local walk exploits.
fn line_radii<T: Scalar>(values: &[T], k: usize) -> Vec<T> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<T> = order.iter().map(|&i| values[i]).collect();

    let window = |i: usize, j: usize| -> T {
        let left = distance(&sorted[i..=i], &sorted[j..=j]);
        let right = distance(&sorted[i..=i], &sorted[j + k - 1..j + k]);
        left.max(right)
    };

    let mut out = vec![T::zero(); n];
    let mut j = 0usize;
    for i in 0..n {
        let lo = (i + 1).saturating_sub(k);
        let hi = i.min(n - k);
        j = j.clamp(lo, hi);
        while j > lo && window(i, j - 1) <= window(i, j) {
            j -= 1;
        }
        while j < hi && window(i, j + 1) <= window(i, j) {
            j += 1;
        }
        out[order[i]] = window(i, j);
    }
    out
}

/// Smallest integer `k ≥ 1` with `k^den ≥ n^num`, clamped to `n`; i.e. `⌈n^{num/den}⌉`.
pub(crate) fn ceil_rational_power(n: usize, num: u32, den: u32) -> usize {
    if n <= 1 {
        return 1;
    }
    let guess = (n as f64).powf(num as f64 / den as f64).ceil().max(1.0) as usize;
    let target = (n as u128).checked_pow(num);
    let Some(target) = target else {
        return guess.clamp(1, n);
    };
    // `None` means k^den overflowed u128 and therefore exceeds the target.
    let at_least = |k: usize| (k as u128).checked_pow(den).map_or(true, |v| v >= target);
    let mut k = guess.max(1);
    while k > 1 && at_least(k - 1) {
        k -= 1;
    }
    while !at_least(k) {
        k += 1;
    }
    k.clamp(1, n)
}

/// `⌈n^{4/(4+D)}⌉` clamped to `[1, n]`.
pub fn default_k(n: usize, dim: usize) -> usize {
    ceil_rational_power(n, 4, 4 + dim as u32)
}
