//! Measurement protocols for the soft-to-hard collapse experiments.
//!
//! Two protocols compare a fixed-length soft run against Lloyd K-Means from
//! the same initialization: `fixed` draws M initializations once and reuses
//! them at every temperature; `resampled` draws a fresh initialization per
//! (temperature, trial) cell. Every cell's seed is derived from the master
//! seed by a SplitMix64 finalizer chain over (protocol id, temperature
//! index, trial index), so the grid is embarrassingly parallel and its
//! output is independent of worker scheduling: cells are computed from
//! pre-derived seeds and reduced in grid order.

use crate::assign::{responsibilities, RespMode, Temperature};
use crate::cluster::{default_tol, kmeans, softrbf_fit, KMeansResult};
use crate::geometry::{optimal_permutation_match, pairwise_sq_distances, Centroids, Dataset};
use crate::synthdata::{generate, GenSpec};
use crate::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Geometric temperature grid from `sigma_min` up to `sigma_max`:
/// `values[t] = sigma_min * (sigma_max / sigma_min)^(t / (L - 1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSchedule {
    pub sigma_min: f64,
    pub sigma_max: f64,
    values: Vec<f64>,
}

impl SigmaSchedule {
    pub fn new(sigma_min: f64, sigma_max: f64, len: usize) -> Result<Self> {
        if !(sigma_min.is_finite() && sigma_max.is_finite() && 0.0 < sigma_min && sigma_min < sigma_max)
        {
            return Err(Error::InvalidScheduleBounds(sigma_min, sigma_max));
        }
        if len < 2 {
            return Err(Error::ScheduleTooShort(len));
        }
        let ratio = sigma_max / sigma_min;
        let steps = (len - 1) as f64;
        let values = (0..len)
            .map(|t| sigma_min * ratio.powf(t as f64 / steps))
            .collect();
        Ok(SigmaSchedule {
            sigma_min,
            sigma_max,
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index range of the cold half: the first `ceil(L / 2)` entries.
    pub fn lower_half(&self) -> std::ops::Range<usize> {
        0..self.values.len().div_ceil(2)
    }
}

/// Initialization regime for the collapse experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// One pool of M initializations shared by every temperature.
    Fixed,
    /// A fresh initialization per (temperature, trial) cell.
    Resampled,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Fixed => "fixed",
            Protocol::Resampled => "resampled",
        }
    }

    /// Stream id in the seed-derivation chain. Id 0 is reserved for
    /// standalone initialization draws such as K-Means restarts.
    fn id(self) -> u64 {
        match self {
            Protocol::Fixed => 1,
            Protocol::Resampled => 2,
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Protocol::Fixed),
            "resampled" => Ok(Protocol::Resampled),
            other => Err(Error::InvalidArgument(format!(
                "unknown protocol: {other} (expected fixed or resampled)"
            ))),
        }
    }
}

/// One collapse experiment: dataset, clustering sizes, temperature grid,
/// responsibility map, protocol, and the master seed everything derives
/// from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: GenSpec,
    pub k: usize,
    /// Soft iteration count; also the Lloyd iteration budget.
    pub iters: usize,
    /// Trials per temperature.
    pub runs: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub schedule_len: usize,
    pub mode: RespMode,
    pub protocol: Protocol,
    pub master_seed: u64,
}

impl ExperimentConfig {
    /// Canonical experiment sizes: k=3, 150 iterations, 200 trials, and the
    /// 50-point geometric grid on [1e-3, 1e-1].
    pub fn new(dataset: GenSpec, mode: RespMode, protocol: Protocol, master_seed: u64) -> Self {
        ExperimentConfig {
            dataset,
            k: 3,
            iters: 150,
            runs: 200,
            sigma_min: 1e-3,
            sigma_max: 1e-1,
            schedule_len: 50,
            mode,
            protocol,
            master_seed,
        }
    }

    pub fn schedule(&self) -> Result<SigmaSchedule> {
        SigmaSchedule::new(self.sigma_min, self.sigma_max, self.schedule_len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidArgument(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        if self.iters == 0 {
            return Err(Error::InvalidArgument("iters must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::InvalidArgument("runs must be at least 1".into()));
        }
        self.schedule()?;
        Ok(())
    }
}

/// Measurements at one temperature, across all trials.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaRecord {
    pub sigma: f64,
    /// Per-trial permutation-matched summed centroid distance.
    pub runs: Vec<f64>,
    /// Per-trial worst single-centroid distance under the same matching.
    pub max_devs: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (zero for a single trial).
    pub std: f64,
    pub mean_max_dev: f64,
}

impl SigmaRecord {
    fn from_runs(sigma: f64, runs: Vec<f64>, max_devs: Vec<f64>) -> Self {
        let m = runs.len() as f64;
        let mean = runs.iter().sum::<f64>() / m;
        let std = if runs.len() > 1 {
            (runs.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (m - 1.0)).sqrt()
        } else {
            0.0
        };
        let mean_max_dev = max_devs.iter().sum::<f64>() / m;
        SigmaRecord {
            sigma,
            runs,
            max_devs,
            mean,
            std,
            mean_max_dev,
        }
    }

    /// Standard error of the mean discrepancy.
    pub fn stderr(&self) -> f64 {
        self.std / (self.runs.len() as f64).sqrt()
    }
}

/// Discrepancy-vs-temperature curve for one (dataset, mode, protocol) cell.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceCurve {
    pub protocol: Protocol,
    pub dataset: String,
    pub mode: RespMode,
    pub records: Vec<SigmaRecord>,
    /// Soft iterations that froze some cluster for lack of mass, summed
    /// over the whole grid.
    pub zero_mass_events: usize,
    /// Responsibility rows that needed defensive renormalization, summed
    /// over the whole grid.
    pub renormalized_rows: usize,
}

impl ConvergenceCurve {
    pub fn sigmas(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sigma).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.mean).collect()
    }

    /// Rank correlation between temperature and mean discrepancy; +1 means
    /// the discrepancy shrinks monotonically as the temperature does.
    pub fn spearman(&self) -> f64 {
        spearman(&self.sigmas(), &self.means())
    }

    /// CSV with one row per temperature. `max_centroid_dev` is the mean
    /// over trials of the per-trial worst single-centroid deviation.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("protocol,dataset,mode,sigma,mean_R,std_R,max_centroid_dev,n_runs\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.protocol.name(),
                self.dataset,
                self.mode.name(),
                r.sigma,
                r.mean,
                r.std,
                r.mean_max_dev,
                r.runs.len()
            ));
        }
        out
    }
}

/// Power-law fit of a discrepancy curve: least squares on
/// (ln sigma, ln R), so `R = e^b * sigma^m`.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub m: f64,
    pub b: f64,
    pub r2: f64,
    pub points_used: usize,
    /// Zero-discrepancy points in the window; excluded from the fit.
    pub excluded_zeros: usize,
    /// (lowest, highest) temperature actually used.
    pub fit_range: (f64, f64),
}

/// Fits `ln R = m ln sigma + b` by ordinary least squares over the points
/// with `R > 0`. Constant curves fit perfectly with slope 0.
pub fn fit_power_law(sigmas: &[f64], rs: &[f64]) -> Result<RateFit> {
    assert_eq!(sigmas.len(), rs.len());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut excluded = 0;
    for (&s, &r) in sigmas.iter().zip(rs) {
        if r > 0.0 {
            xs.push(s.ln());
            ys.push(r.ln());
            lo = lo.min(s);
            hi = hi.max(s);
        } else {
            excluded += 1;
        }
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientPositivePoints(n));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let m = sxy / sxx;
    let b = my - m * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (m * x + b);
            e * e
        })
        .sum();
    let r2 = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        m,
        b,
        r2,
        points_used: n,
        excluded_zeros: excluded,
        fit_range: (lo, hi),
    })
}

/// Power-law fit over the full curve.
pub fn loglog_fit(curve: &ConvergenceCurve) -> Result<RateFit> {
    fit_power_law(&curve.sigmas(), &curve.means())
}

/// Power-law fit over the cold half of the curve only. Large-temperature
/// saturation (the discrepancy cannot exceed a dataset-dependent cap)
/// flattens the warm end and biases the full fit, so both are reported.
pub fn loglog_fit_lower_half(curve: &ConvergenceCurve) -> Result<RateFit> {
    let half = curve.records.len().div_ceil(2);
    let sigmas: Vec<f64> = curve.records[..half].iter().map(|r| r.sigma).collect();
    let means: Vec<f64> = curve.records[..half].iter().map(|r| r.mean).collect();
    fit_power_law(&sigmas, &means)
}

/// Geometry of a clustering solution, as used by the deviation bounds.
#[derive(Debug, Clone, Serialize)]
pub struct SeparationStats {
    /// Bounding radius of the dataset.
    pub radius: f64,
    /// Smallest cluster fraction `min_j |S_j| / n`.
    pub alpha: f64,
    /// Smallest point margin: second-nearest minus nearest centroid
    /// distance (root distances).
    pub gamma_min: f64,
}

/// Margin and occupancy statistics of `km`'s solution on `x`.
pub fn separation_stats(x: &Dataset, km: &KMeansResult) -> SeparationStats {
    let k = km.centroids.k();
    let n = x.len();
    let mut counts = vec![0usize; k];
    for i in 0..n {
        counts[km.labels.label(i)] += 1;
    }
    let alpha = counts.iter().copied().min().unwrap_or(0) as f64 / n as f64;
    let mut gamma_min = f64::INFINITY;
    if k >= 2 {
        let dm = pairwise_sq_distances(x, &km.centroids).expect("km produced on x");
        for i in 0..n {
            let mut best = f64::INFINITY;
            let mut second = f64::INFINITY;
            for &sq in dm.row(i) {
                let d = sq.sqrt();
                if d < best {
                    second = best;
                    best = d;
                } else if d < second {
                    second = d;
                }
            }
            gamma_min = gamma_min.min(second - best);
        }
    } else {
        gamma_min = 0.0;
    }
    SeparationStats {
        radius: x.radius(),
        alpha,
        gamma_min,
    }
}

/// One-step soft re-estimate of a K-Means solution's centroids.
#[derive(Debug, Clone, Serialize)]
pub struct DeviationMeasurement {
    pub sigma: f64,
    /// Worst per-centroid distance between the soft re-estimate and the
    /// K-Means centroid (no matching needed; clusters correspond).
    pub max_dev: f64,
    /// Whether every cluster retains at least half its members' weight:
    /// `sum_{i in S_j} r_ij >= |S_j| / 2`.
    pub mass_ok: bool,
}

/// Computes responsibilities at the K-Means centroids and measures how far
/// one weighted-mean update moves each centroid. Clusters with vanishing
/// mass stay in place (zero deviation), matching the optimizer.
pub fn soft_centroid_deviation(
    x: &Dataset,
    km: &KMeansResult,
    t: Temperature,
    mode: RespMode,
) -> Result<DeviationMeasurement> {
    let mu = &km.centroids;
    let (k, d) = (mu.k(), mu.dim());
    let dm = pairwise_sq_distances(x, mu)?;
    let resp = responsibilities(&dm, t, mode)?;

    let mut counts = vec![0usize; k];
    let mut cell_mass = vec![0.0; k];
    let mut w = vec![0.0; k * d];
    let mut r = vec![0.0; k];
    for i in 0..x.len() {
        let j_hard = km.labels.label(i);
        counts[j_hard] += 1;
        cell_mass[j_hard] += resp.get(i, j_hard);
        let p = x.point(i);
        for (j, &rij) in resp.row(i).iter().enumerate() {
            r[j] += rij;
            for c in 0..d {
                w[j * d + c] += rij * p[c];
            }
        }
    }

    let floor = crate::cluster::mass_floor(x.len());
    let mut max_dev: f64 = 0.0;
    for j in 0..k {
        if r[j] > floor {
            let mut sq = 0.0;
            for c in 0..d {
                let diff = w[j * d + c] / r[j] - mu.row(j)[c];
                sq += diff * diff;
            }
            max_dev = max_dev.max(sq.sqrt());
        }
    }
    let mass_ok = (0..k).all(|j| cell_mass[j] >= counts[j] as f64 / 2.0);
    Ok(DeviationMeasurement {
        sigma: t.sigma(),
        max_dev,
        mass_ok,
    })
}

/// Verdict of one deviation-bound check at one temperature.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub mode: RespMode,
    pub sigma: f64,
    pub deviation: f64,
    /// Closed-form ceiling `(2 R / alpha)(k - 1) exp(-gamma_min^2 / (2 sigma^2))`;
    /// only emitted for the exponential-map check.
    pub bound: Option<f64>,
    /// `deviation / sigma`; only emitted for the sparse-map check, whose
    /// ceiling is linear in sigma with an unspecified constant.
    pub ratio: Option<f64>,
    /// False when the check cannot apply: degenerate geometry
    /// (`gamma_min = 0` or an empty cluster), or the mass condition failed
    /// at this temperature.
    pub applicable: bool,
    /// True when the geometry itself is degenerate, never a failure.
    pub vacuous: bool,
    /// Pass/fail of `deviation <= bound` where applicable.
    pub passed: Option<bool>,
}

/// Checks a measured one-step deviation against the mode's ceiling.
///
/// The exponential map's ceiling holds only in the regime where each
/// cluster keeps at least half of its members' responsibility mass, so the
/// caller passes that measured condition in `mass_ok`; outside it the check
/// is reported as inapplicable rather than failed.
pub fn check_bounds(
    stats: &SeparationStats,
    k: usize,
    sigma: f64,
    deviation: f64,
    mode: RespMode,
    mass_ok: bool,
) -> BoundReport {
    match mode {
        RespMode::Entmax15 => BoundReport {
            mode,
            sigma,
            deviation,
            bound: None,
            ratio: Some(deviation / sigma),
            applicable: true,
            vacuous: false,
            passed: None,
        },
        _ => {
            let vacuous = stats.gamma_min <= 0.0 || stats.alpha <= 0.0;
            if vacuous {
                return BoundReport {
                    mode,
                    sigma,
                    deviation,
                    bound: None,
                    ratio: None,
                    applicable: false,
                    vacuous: true,
                    passed: None,
                };
            }
            let bound = (2.0 * stats.radius / stats.alpha)
                * (k as f64 - 1.0)
                * (-stats.gamma_min * stats.gamma_min / (2.0 * sigma * sigma)).exp();
            if !mass_ok {
                return BoundReport {
                    mode,
                    sigma,
                    deviation,
                    bound: Some(bound),
                    ratio: None,
                    applicable: false,
                    vacuous: false,
                    passed: None,
                };
            }
            BoundReport {
                mode,
                sigma,
                deviation,
                bound: Some(bound),
                ratio: None,
                applicable: true,
                vacuous: false,
                passed: Some(deviation <= bound),
            }
        }
    }
}

/// SplitMix64 finalizer: a bijective avalanche mixer on 64 bits.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed for one grid cell: chained SplitMix64 finalizers over
/// master seed, stream id, temperature index, and trial index.
pub fn child_seed(master: u64, stream: u64, sigma_index: u64, trial_index: u64) -> u64 {
    let mut h = mix64(master);
    h = mix64(h ^ stream);
    h = mix64(h ^ sigma_index);
    mix64(h ^ trial_index)
}

/// Draws a random initial centroid configuration: k independent uniform
/// points in the data's axis-aligned bounding box, coordinates in row-major
/// draw order. Requires n >= k so a paired Lloyd run is well-posed.
pub fn draw_init(x: &Dataset, k: usize, seed: u64) -> Result<Centroids> {
    if x.len() < k {
        return Err(Error::TooFewPoints { n: x.len(), k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = x.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for i in 0..x.len() {
        for (c, &v) in x.point(i).iter().enumerate() {
            lo[c] = lo[c].min(v);
            hi[c] = hi[c].max(v);
        }
    }
    let mut data = Vec::with_capacity(k * d);
    for _ in 0..k {
        for c in 0..d {
            data.push(rng.random_range(lo[c]..=hi[c]));
        }
    }
    Centroids::new(k, d, data)
}

/// Lowest-distortion Lloyd solution over `restarts` seeded initializations.
/// Ties keep the earliest restart.
pub fn best_kmeans(
    x: &Dataset,
    k: usize,
    restarts: usize,
    seed: u64,
    max_iters: usize,
) -> Result<KMeansResult> {
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    let mut best: Option<(f64, KMeansResult)> = None;
    for r in 0..restarts {
        let init = draw_init(x, k, child_seed(seed, 0, 0, r as u64))?;
        let km = kmeans(x, &init, max_iters, default_tol(x))?;
        let score = crate::cluster::hard_distortion(x, &km.centroids)?;
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, km));
        }
    }
    Ok(best.expect("restarts >= 1").1)
}

struct CellOut {
    sum_dist: f64,
    max_dev: f64,
    zero_mass: usize,
    renorm: usize,
}

fn soft_vs_kmeans_cell(
    x: &Dataset,
    init: &Centroids,
    km_centroids: &Centroids,
    sigma: f64,
    cfg: &ExperimentConfig,
) -> Result<CellOut> {
    let t = Temperature::new(sigma)?;
    let fit = softrbf_fit(x, init, t, cfg.iters, cfg.mode)?;
    let (perm, sum_dist) = optimal_permutation_match(&fit.centroids, km_centroids)?;
    let mut max_dev: f64 = 0.0;
    for j in 0..fit.centroids.k() {
        let a = fit.centroids.row(j);
        let b = km_centroids.row(perm[j]);
        let sq: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
        max_dev = max_dev.max(sq.sqrt());
    }
    Ok(CellOut {
        sum_dist,
        max_dev,
        zero_mass: fit.zero_mass_events,
        renorm: fit.renormalized_rows,
    })
}

fn assemble_curve(
    cfg: &ExperimentConfig,
    schedule: &SigmaSchedule,
    cells: Vec<CellOut>,
) -> ConvergenceCurve {
    let m = cfg.runs;
    let mut records = Vec::with_capacity(schedule.len());
    let mut zero_mass_events = 0;
    let mut renormalized_rows = 0;
    for (l, &sigma) in schedule.values().iter().enumerate() {
        let block = &cells[l * m..(l + 1) * m];
        let runs: Vec<f64> = block.iter().map(|c| c.sum_dist).collect();
        let max_devs: Vec<f64> = block.iter().map(|c| c.max_dev).collect();
        zero_mass_events += block.iter().map(|c| c.zero_mass).sum::<usize>();
        renormalized_rows += block.iter().map(|c| c.renorm).sum::<usize>();
        records.push(SigmaRecord::from_runs(sigma, runs, max_devs));
    }
    ConvergenceCurve {
        protocol: cfg.protocol,
        dataset: cfg.dataset.kind.name().to_string(),
        mode: cfg.mode,
        records,
        zero_mass_events,
        renormalized_rows,
    }
}

/// Shared-initialization protocol: draw M initializations once, solve
/// K-Means once per initialization, then at every temperature rerun the
/// soft optimizer from those same initializations and record the matched
/// centroid discrepancy per trial.
pub fn run_fixed_init(cfg: &ExperimentConfig) -> Result<ConvergenceCurve> {
    cfg.validate()?;
    if cfg.protocol != Protocol::Fixed {
        return Err(Error::InvalidArgument(
            "run_fixed_init requires protocol = fixed".into(),
        ));
    }
    let x = generate(&cfg.dataset)?;
    let schedule = cfg.schedule()?;
    let inits = (0..cfg.runs)
        .map(|i| {
            draw_init(
                &x,
                cfg.k,
                child_seed(cfg.master_seed, Protocol::Fixed.id(), 0, i as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let kms = inits
        .par_iter()
        .map(|init| kmeans(&x, init, cfg.iters, default_tol(&x)))
        .collect::<Result<Vec<_>>>()?;

    let grid: Vec<(usize, usize)> = (0..schedule.len())
        .flat_map(|l| (0..cfg.runs).map(move |i| (l, i)))
        .collect();
    let cells = grid
        .into_par_iter()
        .map(|(l, i)| {
            soft_vs_kmeans_cell(&x, &inits[i], &kms[i].centroids, schedule.values()[l], cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_curve(cfg, &schedule, cells))
}

/// Fresh-initialization protocol: every (temperature, trial) cell draws its
/// own initialization from its derived seed and runs both K-Means and the
/// soft optimizer from it.
pub fn run_resampled(cfg: &ExperimentConfig) -> Result<ConvergenceCurve> {
    cfg.validate()?;
    if cfg.protocol != Protocol::Resampled {
        return Err(Error::InvalidArgument(
            "run_resampled requires protocol = resampled".into(),
        ));
    }
    let x = generate(&cfg.dataset)?;
    let schedule = cfg.schedule()?;
    let grid: Vec<(usize, usize)> = (0..schedule.len())
        .flat_map(|l| (0..cfg.runs).map(move |i| (l, i)))
        .collect();
    let cells = grid
        .into_par_iter()
        .map(|(l, i)| {
            let seed = child_seed(
                cfg.master_seed,
                Protocol::Resampled.id(),
                l as u64,
                i as u64,
            );
            let init = draw_init(&x, cfg.k, seed)?;
            let km = kmeans(&x, &init, cfg.iters, default_tol(&x))?;
            soft_vs_kmeans_cell(&x, &init, &km.centroids, schedule.values()[l], cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_curve(cfg, &schedule, cells))
}

/// Runs whichever protocol `cfg` names.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ConvergenceCurve> {
    match cfg.protocol {
        Protocol::Fixed => run_fixed_init(cfg),
        Protocol::Resampled => run_resampled(cfg),
    }
}

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either input has no rank variance.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        // Tied block [i, j] shares the average of ranks i+1..=j+1.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}
