//! Hard and soft assignment maps from a squared-distance matrix.
//!
//! Both soft maps consume logits `z_ij = -d2_ij / (2 sigma^2)`. Softmax rows
//! are computed in max-shifted log space, so a row never overflows and the
//! winning entry of a well-separated row is exactly 1.0 after underflow.
//! Entmax-1.5 uses the exact sorted-threshold construction
//! `p_j = [ (z_j - tau) / 2 ]_+^2`, which produces genuinely sparse rows: any
//! entry whose logit trails the row maximum by 2 or more is exactly zero.

use crate::geometry::DistanceMatrix;
use crate::{Error, Result};

/// Row sums further than this from 1 trigger a defensive renormalization,
/// which is counted and surfaced as a diagnostic rather than silently fixed.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Temperature parameter `sigma`: strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidTemperature(sigma));
        }
        Ok(Self(sigma))
    }

    pub fn sigma(self) -> f64 {
        self.0
    }

    /// `1 / (2 sigma^2)`, the logit scale shared by both soft maps.
    pub fn inv_two_sigma_sq(self) -> f64 {
        1.0 / (2.0 * self.0 * self.0)
    }
}

/// Which map produced a responsibility matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RespMode {
    Hard,
    Softmax,
    Entmax15,
}

impl RespMode {
    pub fn name(self) -> &'static str {
        match self {
            RespMode::Hard => "hard",
            RespMode::Softmax => "softmax",
            RespMode::Entmax15 => "entmax15",
        }
    }
}

impl std::str::FromStr for RespMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(RespMode::Hard),
            "softmax" => Ok(RespMode::Softmax),
            "entmax15" => Ok(RespMode::Entmax15),
            other => Err(Error::InvalidArgument(format!(
                "unknown responsibility mode `{other}` (expected hard, softmax, or entmax15)"
            ))),
        }
    }
}

/// Hard cluster labels, one per point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    labels: Vec<usize>,
}

impl Assignment {
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Row-stochastic n-by-k responsibilities with the mode that built them.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponsibilityMatrix {
    n: usize,
    k: usize,
    data: Vec<f64>,
    mode: RespMode,
    renormalized_rows: usize,
}

impl ResponsibilityMatrix {
    /// Validates entries and row sums; rows whose sum strays beyond
    /// [`ROW_SUM_TOL`] are renormalized and counted.
    pub fn from_raw(n: usize, k: usize, mut data: Vec<f64>, mode: RespMode) -> Result<Self> {
        if data.len() != n * k {
            return Err(Error::InvalidArgument(format!(
                "responsibility buffer holds {} values, expected n*k={}",
                data.len(),
                n * k
            )));
        }
        if !data.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::NonFinite {
                context: "responsibilities",
            });
        }
        let mut renormalized = 0;
        for i in 0..n {
            let row = &mut data[i * k..(i + 1) * k];
            let sum: f64 = row.iter().sum();
            if sum <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "responsibility row {i} sums to {sum}"
                )));
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                for v in row.iter_mut() {
                    *v /= sum;
                }
                renormalized += 1;
            }
        }
        Ok(Self {
            n,
            k,
            data,
            mode,
            renormalized_rows: renormalized,
        })
    }

    /// One-hot rows from a hard assignment.
    pub fn from_assignment(assignment: &Assignment, k: usize) -> Result<Self> {
        let n = assignment.len();
        let mut data = vec![0.0; n * k];
        for (i, &j) in assignment.labels().iter().enumerate() {
            if j >= k {
                return Err(Error::InvalidArgument(format!(
                    "label {j} out of range for k={k}"
                )));
            }
            data[i * k + j] = 1.0;
        }
        Ok(Self {
            n,
            k,
            data,
            mode: RespMode::Hard,
            renormalized_rows: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mode(&self) -> RespMode {
        self.mode
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k + j]
    }

    /// How many rows needed a defensive renormalization at construction.
    pub fn renormalized_rows(&self) -> usize {
        self.renormalized_rows
    }

    /// Index of the largest entry in row `i`, lowest index on ties.
    pub fn argmax_row(&self, i: usize) -> usize {
        let row = self.row(i);
        let mut best = 0;
        for (j, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = j;
            }
        }
        best
    }
}

/// Argmin assignment per row, breaking ties toward the lowest index.
pub fn hard_assign(d: &DistanceMatrix) -> Assignment {
    let mut labels = Vec::with_capacity(d.n());
    for i in 0..d.n() {
        let row = d.row(i);
        let mut best = 0;
        for (j, &v) in row.iter().enumerate() {
            if v < row[best] {
                best = j;
            }
        }
        labels.push(best);
    }
    Assignment { labels }
}

/// Gaussian softmax responsibilities
/// `r_ij = exp(-d2_ij / (2 sigma^2)) / sum_l exp(-d2_il / (2 sigma^2))`,
/// evaluated with the row max subtracted in log space.
pub fn softmax_responsibilities(
    d: &DistanceMatrix,
    t: Temperature,
) -> Result<ResponsibilityMatrix> {
    let scale = t.inv_two_sigma_sq();
    let (n, k) = (d.n(), d.k());
    let mut data = Vec::with_capacity(n * k);
    for i in 0..n {
        let row = d.row(i);
        // Max logit corresponds to the minimum squared distance.
        let min_sq = row.iter().cloned().fold(f64::INFINITY, f64::min);
        let start = data.len();
        let mut sum = 0.0;
        for &sq in row {
            let e = (-(sq - min_sq) * scale).exp();
            data.push(e);
            sum += e;
        }
        for v in &mut data[start..] {
            *v /= sum;
        }
    }
    ResponsibilityMatrix::from_raw(n, k, data, RespMode::Softmax)
}

/// Exact Entmax-1.5 transform of one logit vector:
/// `p_j = [ (z_j - tau(z)) / 2 ]_+^2` with `tau` chosen so the result sums
/// to one.
///
/// The threshold comes from the sorted cumulative construction. Working on
/// half-logits shifted by the row max keeps every retained value in `[-1, 0]`:
/// any entry more than 1 below the shifted max would need `(s_j - tau)^2 > 1`
/// to enter the support, which the sum-to-one constraint forbids, so such
/// entries are dropped before the cumulative pass. That filter is also what
/// keeps the arithmetic stable when logits are huge (tiny temperatures).
pub fn entmax15(z: &[f64]) -> Vec<f64> {
    let k = z.len();
    if k == 0 {
        return Vec::new();
    }
    let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut cand: Vec<f64> = z
        .iter()
        .map(|&v| (v - zmax) / 2.0)
        .filter(|&s| s >= -1.0)
        .collect();
    cand.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite logits"));

    // For each candidate support size rho, the threshold solving
    // sum_{j<=rho} (s_j - tau)^2 = 1 is tau = mean - sqrt((1 - rho*var)/rho).
    // The valid support is the largest rho with tau(rho) <= s_(rho).
    let mut csum = 0.0;
    let mut csq = 0.0;
    let mut tau = cand[0] - 1.0;
    for (idx, &s) in cand.iter().enumerate() {
        let rho = (idx + 1) as f64;
        csum += s;
        csq += s * s;
        let mean = csum / rho;
        let ss = csq - csum * mean; // rho * variance, computed on O(1) values
        let delta = ((1.0 - ss) / rho).max(0.0);
        let t = mean - delta.sqrt();
        if t <= s {
            tau = t;
        }
    }

    z.iter()
        .map(|&v| {
            let gap = (v - zmax) / 2.0 - tau;
            if gap > 0.0 {
                gap * gap
            } else {
                0.0
            }
        })
        .collect()
}

/// Entmax-1.5 responsibilities of the temperature-scaled logits. Rows may be
/// exactly sparse, including exactly one-hot once every competing logit
/// trails by 2 or more.
pub fn entmax_responsibilities(
    d: &DistanceMatrix,
    t: Temperature,
) -> Result<ResponsibilityMatrix> {
    let scale = t.inv_two_sigma_sq();
    let (n, k) = (d.n(), d.k());
    let mut data = Vec::with_capacity(n * k);
    let mut logits = vec![0.0; k];
    for i in 0..n {
        for (l, &sq) in logits.iter_mut().zip(d.row(i)) {
            *l = -sq * scale;
        }
        data.extend_from_slice(&entmax15(&logits));
    }
    ResponsibilityMatrix::from_raw(n, k, data, RespMode::Entmax15)
}

/// Responsibilities for `mode` at temperature `t`; hard mode yields one-hot
/// rows from the argmin assignment.
pub fn responsibilities(
    d: &DistanceMatrix,
    t: Temperature,
    mode: RespMode,
) -> Result<ResponsibilityMatrix> {
    match mode {
        RespMode::Hard => ResponsibilityMatrix::from_assignment(&hard_assign(d), d.k()),
        RespMode::Softmax => softmax_responsibilities(d, t),
        RespMode::Entmax15 => entmax_responsibilities(d, t),
    }
}
