//! Lloyd K-Means and its soft gradient counterpart.
//!
//! The soft optimizer follows the fixed-step schedule `eta_j = 1 / (2 r_j)`,
//! under which the gradient step `mu_j - eta_j * 2 (r_j mu_j - w_j)` lands
//! exactly on the weighted mean `w_j / r_j`. The update is therefore computed
//! in that closed form. Both algorithms funnel through the same
//! accumulate-then-divide routine, so when responsibilities collapse to
//! one-hot rows the soft iteration reproduces the Lloyd iteration bit for
//! bit. That exactness is load-bearing: collapse experiments report the two
//! trajectories as identical (discrepancy 0.0) rather than drifting apart at
//! rounding scale.

use crate::assign::{
    hard_assign, responsibilities, Assignment, RespMode, ResponsibilityMatrix, Temperature,
};
use crate::geometry::{pairwise_sq_distances, Centroids, Dataset, DistanceMatrix};
use crate::{Error, Result};

/// Clusters whose accumulated mass falls at or below this floor keep their
/// previous centroid instead of dividing by a vanishing denominator.
pub fn mass_floor(n: usize) -> f64 {
    1e-12 * n as f64
}

/// Default convergence tolerance for [`kmeans`]: 1e-9 of the data radius.
pub fn default_tol(x: &Dataset) -> f64 {
    1e-9 * x.radius()
}

/// Outcome of a Lloyd K-Means run.
#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub centroids: Centroids,
    pub labels: Assignment,
    /// Distortion at the start of each executed iteration; non-increasing.
    pub distortion_history: Vec<f64>,
    pub iterations_run: usize,
    /// True when the max centroid shift dropped below tolerance within the
    /// iteration budget.
    pub converged: bool,
}

/// Outcome of a fixed-length soft optimization run.
#[derive(Debug, Clone)]
pub struct SoftRbfResult {
    pub centroids: Centroids,
    /// Responsibilities computed in the final iteration (at the centroids
    /// that produced the final update).
    pub responsibilities: ResponsibilityMatrix,
    /// Soft distortion at the start of each iteration. Descent is expected
    /// but recorded rather than enforced; callers treat violations as a
    /// diagnostic.
    pub loss_history: Vec<f64>,
    pub iterations_run: usize,
    /// Iteration-steps in which some cluster was frozen for lack of mass.
    pub zero_mass_events: usize,
    /// Responsibility rows that needed defensive renormalization.
    pub renormalized_rows: usize,
}

/// Per-cluster mass and weighted point sums from one responsibility pass.
#[derive(Debug, Clone)]
pub struct GradientStats {
    /// `r_j = sum_i R_ij`, length k.
    pub mass: Vec<f64>,
    /// `w_j = sum_i R_ij x_i`, row-major k-by-d.
    pub weighted_sum: Vec<f64>,
    /// Clusters frozen in this step because their mass hit the floor.
    pub frozen_clusters: Vec<usize>,
}

impl GradientStats {
    /// Full-batch gradient `2 (r_j mu_j - w_j)` of the soft distortion with
    /// responsibilities held fixed, row-major k-by-d.
    pub fn gradient(&self, mu: &Centroids) -> Vec<f64> {
        let (k, d) = (mu.k(), mu.dim());
        let mut g = vec![0.0; k * d];
        for j in 0..k {
            let row = mu.row(j);
            for c in 0..d {
                g[j * d + c] = 2.0 * (self.mass[j] * row[c] - self.weighted_sum[j * d + c]);
            }
        }
        g
    }
}

/// Accumulates `w_j = sum_i R_ij x_i` and `r_j = sum_i R_ij` in point order.
///
/// The hard path adds exactly the terms with `R_ij = 1`; the soft path adds
/// every term. Since `1.0 * x == x` and adding `0.0 * x` leaves an IEEE sum
/// unchanged, one-hot responsibilities make both paths produce identical
/// bits. Keep the iteration order aligned with `weighted_sums_hard`.
fn weighted_sums_soft(x: &Dataset, resp: &ResponsibilityMatrix) -> (Vec<f64>, Vec<f64>) {
    let (k, d) = (resp.k(), x.dim());
    let mut w = vec![0.0; k * d];
    let mut r = vec![0.0; k];
    for i in 0..x.len() {
        let p = x.point(i);
        let row = resp.row(i);
        for (j, &rij) in row.iter().enumerate() {
            r[j] += rij;
            let acc = &mut w[j * d..(j + 1) * d];
            for (a, &v) in acc.iter_mut().zip(p) {
                *a += rij * v;
            }
        }
    }
    (w, r)
}

fn weighted_sums_hard(x: &Dataset, labels: &[usize], k: usize) -> (Vec<f64>, Vec<f64>) {
    let d = x.dim();
    let mut w = vec![0.0; k * d];
    let mut r = vec![0.0; k];
    for (i, &j) in labels.iter().enumerate() {
        r[j] += 1.0;
        let p = x.point(i);
        let acc = &mut w[j * d..(j + 1) * d];
        for (a, &v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    (w, r)
}

/// `mu_j = w_j / r_j` where the mass clears `floor`; otherwise the previous
/// centroid is kept and the cluster index reported.
fn centroids_from_sums(
    prev: &Centroids,
    w: &[f64],
    r: &[f64],
    floor: f64,
) -> (Centroids, Vec<usize>) {
    let (k, d) = (prev.k(), prev.dim());
    let mut data = vec![0.0; k * d];
    let mut frozen = Vec::new();
    for j in 0..k {
        if r[j] > floor {
            for c in 0..d {
                data[j * d + c] = w[j * d + c] / r[j];
            }
        } else {
            data[j * d..(j + 1) * d].copy_from_slice(prev.row(j));
            frozen.push(j);
        }
    }
    (
        Centroids::new(k, d, data).expect("finite centroid update"),
        frozen,
    )
}

fn max_centroid_shift(a: &Centroids, b: &Centroids) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..a.k() {
        let sq: f64 = a
            .row(j)
            .iter()
            .zip(b.row(j))
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        worst = worst.max(sq.sqrt());
    }
    worst
}

/// Lloyd iteration: assign each point to its nearest centroid (ties to the
/// lowest index), then move each non-empty cluster to the mean of its
/// members. Empty clusters keep their previous centroid. Stops once the
/// largest centroid shift drops below `tol`, or after `max_iters`.
pub fn kmeans(
    x: &Dataset,
    init: &Centroids,
    max_iters: usize,
    tol: f64,
) -> Result<KMeansResult> {
    if x.len() < init.k() {
        return Err(Error::TooFewPoints {
            n: x.len(),
            k: init.k(),
        });
    }
    if max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tol must be finite and non-negative, got {tol}"
        )));
    }

    let k = init.k();
    let mut mu = init.clone();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iters {
        let dm = pairwise_sq_distances(x, &mu)?;
        let labels = hard_assign(&dm);
        let mut distortion = 0.0;
        for i in 0..x.len() {
            distortion += dm.get(i, labels.label(i));
        }
        history.push(distortion);

        let (w, r) = weighted_sums_hard(x, labels.labels(), k);
        let (next, _) = centroids_from_sums(&mu, &w, &r, 0.0);
        let shift = max_centroid_shift(&mu, &next);
        mu = next;
        iterations += 1;
        if shift < tol {
            converged = true;
            break;
        }
    }

    // Final labels are re-derived against the returned centroids.
    let dm = pairwise_sq_distances(x, &mu)?;
    let labels = hard_assign(&dm);
    Ok(KMeansResult {
        centroids: mu,
        labels,
        distortion_history: history,
        iterations_run: iterations,
        converged,
    })
}

fn step_inner(
    x: &Dataset,
    mu: &Centroids,
    t: Temperature,
    mode: RespMode,
) -> Result<(Centroids, ResponsibilityMatrix, GradientStats, f64)> {
    let dm = pairwise_sq_distances(x, mu)?;
    let resp = responsibilities(&dm, t, mode)?;
    let loss = soft_distortion_given(&dm, &resp);
    let (w, r) = weighted_sums_soft(x, &resp);
    let (next, frozen) = centroids_from_sums(mu, &w, &r, mass_floor(x.len()));
    Ok((
        next,
        resp,
        GradientStats {
            mass: r,
            weighted_sum: w,
            frozen_clusters: frozen,
        },
        loss,
    ))
}

/// One soft update: responsibilities at `mu`, then the gradient step with
/// `eta_j = 1 / (2 r_j)`, which lands on `w_j / r_j`. Clusters at or below
/// the mass floor are frozen in place and reported in the stats.
pub fn softrbf_step(
    x: &Dataset,
    mu: &Centroids,
    t: Temperature,
    mode: RespMode,
) -> Result<(Centroids, ResponsibilityMatrix, GradientStats)> {
    let (next, resp, stats, _) = step_inner(x, mu, t, mode)?;
    Ok((next, resp, stats))
}

/// Runs exactly `iters` soft updates with no early stopping, recording the
/// soft distortion at the start of each iteration.
pub fn softrbf_fit(
    x: &Dataset,
    init: &Centroids,
    t: Temperature,
    iters: usize,
    mode: RespMode,
) -> Result<SoftRbfResult> {
    if iters == 0 {
        return Err(Error::InvalidArgument("iters must be at least 1".into()));
    }
    let mut mu = init.clone();
    let mut loss_history = Vec::with_capacity(iters);
    let mut zero_mass_events = 0;
    let mut renormalized_rows = 0;
    let mut last_resp: Option<ResponsibilityMatrix> = None;
    for _ in 0..iters {
        let (next, resp, stats, loss) = step_inner(x, &mu, t, mode)?;
        loss_history.push(loss);
        if !stats.frozen_clusters.is_empty() {
            zero_mass_events += 1;
        }
        renormalized_rows += resp.renormalized_rows();
        mu = next;
        last_resp = Some(resp);
    }
    Ok(SoftRbfResult {
        centroids: mu,
        responsibilities: last_resp.expect("iters >= 1"),
        loss_history,
        iterations_run: iters,
        zero_mass_events,
        renormalized_rows,
    })
}

/// `J(mu) = sum_i min_j |x_i - mu_j|^2`.
pub fn hard_distortion(x: &Dataset, mu: &Centroids) -> Result<f64> {
    let dm = pairwise_sq_distances(x, mu)?;
    let mut total = 0.0;
    for i in 0..x.len() {
        total += dm
            .row(i)
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
    }
    Ok(total)
}

fn soft_distortion_given(dm: &DistanceMatrix, resp: &ResponsibilityMatrix) -> f64 {
    let mut total = 0.0;
    for i in 0..dm.n() {
        let drow = dm.row(i);
        let rrow = resp.row(i);
        for (r, d) in rrow.iter().zip(drow) {
            total += r * d;
        }
    }
    total
}

/// `L(mu, R) = sum_ij R_ij |x_i - mu_j|^2`. With a one-hot row the inner sum
/// reduces to that row's minimum term, so this never falls below
/// [`hard_distortion`].
pub fn soft_distortion(x: &Dataset, mu: &Centroids, resp: &ResponsibilityMatrix) -> Result<f64> {
    check_resp_shape(x, mu, resp)?;
    let dm = pairwise_sq_distances(x, mu)?;
    Ok(soft_distortion_given(&dm, resp))
}

/// Soft distortion plus the entropy penalty `2 sigma^2 sum_ij R_ij ln R_ij`,
/// with the `0 ln 0 = 0` convention for exactly sparse rows.
pub fn entropic_objective(
    x: &Dataset,
    mu: &Centroids,
    resp: &ResponsibilityMatrix,
    t: Temperature,
) -> Result<f64> {
    check_resp_shape(x, mu, resp)?;
    let dm = pairwise_sq_distances(x, mu)?;
    let mut entropy_term = 0.0;
    for i in 0..x.len() {
        for &r in resp.row(i) {
            if r > 0.0 {
                entropy_term += r * r.ln();
            }
        }
    }
    let sigma = t.sigma();
    Ok(soft_distortion_given(&dm, resp) + 2.0 * sigma * sigma * entropy_term)
}

fn check_resp_shape(x: &Dataset, mu: &Centroids, resp: &ResponsibilityMatrix) -> Result<()> {
    if resp.n() != x.len() || resp.k() != mu.k() {
        return Err(Error::InvalidArgument(format!(
            "responsibility shape {}x{} does not match n={}, k={}",
            resp.n(),
            resp.k(),
            x.len(),
            mu.k()
        )));
    }
    Ok(())
}
