//! Point sets, centroid sets, and the squared-distance geometry between them.
//!
//! Distances are always computed per pair as `sum_c (x_c - m_c)^2`. The
//! expanded form `|x|^2 + |m|^2 - 2<x,m>` is deliberately avoided: it loses
//! digits to cancellation exactly where this crate cares most, namely points
//! that are almost equidistant to two centroids.

use crate::{Error, Result};

/// Largest k for which [`optimal_permutation_match`] will enumerate all k!
/// permutations.
pub const EXHAUSTIVE_MATCH_BOUND: usize = 10;

/// An n-by-d point set with its bounding radius `max_i |x_i|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    points: Vec<f64>,
    radius: f64,
    labels: Option<Vec<usize>>,
}

impl Dataset {
    /// Wraps a row-major buffer of `n` points in `d` dimensions.
    pub fn new(n: usize, d: usize, points: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::EmptyDataset(format!("n={n}, d={d}")));
        }
        if points.len() != n * d {
            return Err(Error::InvalidArgument(format!(
                "point buffer holds {} values, expected n*d={}",
                points.len(),
                n * d
            )));
        }
        if !points.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { context: "dataset" });
        }
        let mut radius: f64 = 0.0;
        for i in 0..n {
            let sq: f64 = points[i * d..(i + 1) * d].iter().map(|v| v * v).sum();
            radius = radius.max(sq.sqrt());
        }
        Ok(Self {
            n,
            d,
            points,
            radius,
            labels: None,
        })
    }

    /// Convenience constructor from per-point rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument(
                "rows have inconsistent lengths".into(),
            ));
        }
        Self::new(n, d, rows.concat())
    }

    /// Attaches generator ground-truth labels. Length must equal `n`.
    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} points",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `max_i |x_i|`, computed once at construction.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }
}

/// A k-by-d set of cluster centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids {
    k: usize,
    d: usize,
    data: Vec<f64>,
}

impl Centroids {
    pub fn new(k: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::EmptyDataset(format!("k={k}, d={d}")));
        }
        if data.len() != k * d {
            return Err(Error::InvalidArgument(format!(
                "centroid buffer holds {} values, expected k*d={}",
                data.len(),
                k * d
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "centroids",
            });
        }
        Ok(Self { k, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument(
                "rows have inconsistent lengths".into(),
            ));
        }
        Self::new(k, d, rows.concat())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.d..(j + 1) * self.d]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Squared distances between every point and every centroid, row-major n-by-k.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    k: usize,
    sq: Vec<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.sq[i * self.k..(i + 1) * self.k]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sq[i * self.k + j]
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let diff = x - y;
        acc += diff * diff;
    }
    acc
}

/// Squared Euclidean distances from every point of `x` to every row of `m`.
pub fn pairwise_sq_distances(x: &Dataset, m: &Centroids) -> Result<DistanceMatrix> {
    if x.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: m.dim(),
        });
    }
    let (n, k) = (x.len(), m.k());
    let mut sq = Vec::with_capacity(n * k);
    for i in 0..n {
        let p = x.point(i);
        for j in 0..k {
            sq.push(sq_dist(p, m.row(j)));
        }
    }
    Ok(DistanceMatrix { n, k, sq })
}

fn check_bijection(perm: &[usize], k: usize) -> Result<()> {
    if perm.len() != k {
        return Err(Error::NotABijection {
            perm: perm.to_vec(),
            k,
        });
    }
    let mut seen = vec![false; k];
    for &p in perm {
        if p >= k || seen[p] {
            return Err(Error::NotABijection {
                perm: perm.to_vec(),
                k,
            });
        }
        seen[p] = true;
    }
    Ok(())
}

/// Sum of root Euclidean distances `sum_j |a_j - b_{perm(j)}|` under a given
/// pairing of the two centroid sets.
pub fn centroid_set_distance(a: &Centroids, b: &Centroids, perm: &[usize]) -> Result<f64> {
    if a.k() != b.k() || a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            k_a: a.k(),
            d_a: a.dim(),
            k_b: b.k(),
            d_b: b.dim(),
        });
    }
    check_bijection(perm, a.k())?;
    let mut total = 0.0;
    for (j, &p) in perm.iter().enumerate() {
        total += sq_dist(a.row(j), b.row(p)).sqrt();
    }
    Ok(total)
}

/// Advances `p` to the next permutation in lexicographic order.
/// Returns false once `p` is the final (descending) permutation.
fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Finds the pairing of `b`'s rows to `a`'s rows minimizing
/// [`centroid_set_distance`], by exhaustive search over all k! permutations.
///
/// Ties are broken toward the lexicographically smallest permutation, which
/// falls out of visiting candidates in lexicographic order and only accepting
/// strict improvements. Sets larger than [`EXHAUSTIVE_MATCH_BOUND`] are
/// rejected rather than silently taking factorial time.
pub fn optimal_permutation_match(a: &Centroids, b: &Centroids) -> Result<(Vec<usize>, f64)> {
    if a.k() != b.k() || a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            k_a: a.k(),
            d_a: a.dim(),
            k_b: b.k(),
            d_b: b.dim(),
        });
    }
    let k = a.k();
    if k > EXHAUSTIVE_MATCH_BOUND {
        return Err(Error::MatchingTooLarge {
            k,
            max: EXHAUSTIVE_MATCH_BOUND,
        });
    }

    // Root distances between all row pairs, reused across permutations.
    let mut dist = vec![0.0; k * k];
    for j in 0..k {
        for p in 0..k {
            dist[j * k + p] = sq_dist(a.row(j), b.row(p)).sqrt();
        }
    }

    let mut perm: Vec<usize> = (0..k).collect();
    let mut best_perm = perm.clone();
    let mut best = f64::INFINITY;
    loop {
        let total: f64 = perm.iter().enumerate().map(|(j, &p)| dist[j * k + p]).sum();
        if total < best {
            best = total;
            best_perm.copy_from_slice(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok((best_perm, best))
}
