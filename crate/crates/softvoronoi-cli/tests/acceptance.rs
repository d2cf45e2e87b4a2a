//! Acceptance gate: ten behavioral checks with pinned tolerances and
//! budgets. Each check prints exactly one PASS/FAIL line (visible with
//! `--nocapture`; cargo also replays stdout for failing tests) and then
//! asserts, so a red line and a red test always coincide.
//!
//! The checks share one global lock: several carry wall-clock budgets, and
//! budgets are only honest when nothing else competes for the cores.

use std::fs;
use std::process::Command;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use softvoronoi::assign::{
    entmax15, hard_assign, responsibilities, RespMode, ResponsibilityMatrix, Temperature,
};
use softvoronoi::cluster::{
    default_tol, hard_distortion, kmeans, mass_floor, soft_distortion, softrbf_step,
};
use softvoronoi::evalharness::{
    best_kmeans, check_bounds, draw_init, fit_power_law, loglog_fit_lower_half, run_experiment,
    separation_stats, soft_centroid_deviation, ConvergenceCurve, ExperimentConfig, Protocol,
    SigmaSchedule,
};
use softvoronoi::geometry::{pairwise_sq_distances, Centroids, Dataset};
use softvoronoi::synthdata::{generate, DatasetKind, GenSpec};

/// Everything below is pinned: dataset seed, sweep master seed, desk-scale
/// trial count. The seeds are an arbitrary-but-fixed benchmark instance.
const DATA_SEED: u64 = 1;
const MASTER_SEED: u64 = 1;
const DESK_N: usize = 300;
const DESK_RUNS: usize = 20;
const DESK_K: usize = 3;

static GATE: Mutex<()> = Mutex::new(());

fn lock() -> MutexGuard<'static, ()> {
    // A failed check poisons the lock; later checks still run.
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(slot: &str, name: &str, pass: bool, detail: &str) {
    println!(
        "[{slot}] {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn desk_datasets() -> Vec<GenSpec> {
    vec![
        GenSpec::new(DatasetKind::blobs(), DESK_N, DATA_SEED),
        GenSpec::new(DatasetKind::moons(), DESK_N, DATA_SEED),
        GenSpec::new(DatasetKind::spiral(), DESK_N, DATA_SEED),
        GenSpec::new(DatasetKind::circles(), DESK_N, DATA_SEED),
    ]
}

struct DeskBundle {
    /// 16 cells: dataset-major, then mode, then protocol.
    curves: Vec<ConvergenceCurve>,
    elapsed: Duration,
}

/// The full desk-scale grid, run once on a single-thread pool so its
/// wall-clock budget is measured without parallelism.
fn desk_bundle() -> &'static DeskBundle {
    static BUNDLE: OnceLock<DeskBundle> = OnceLock::new();
    BUNDLE.get_or_init(|| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .expect("pool");
        let started = Instant::now();
        let mut curves = Vec::new();
        pool.install(|| {
            for ds in desk_datasets() {
                for mode in [RespMode::Softmax, RespMode::Entmax15] {
                    for protocol in [Protocol::Fixed, Protocol::Resampled] {
                        let mut cfg =
                            ExperimentConfig::new(ds.clone(), mode, protocol, MASTER_SEED);
                        cfg.runs = DESK_RUNS;
                        curves.push(run_experiment(&cfg).expect("desk cell runs"));
                    }
                }
            }
        });
        DeskBundle {
            curves,
            elapsed: started.elapsed(),
        }
    })
}

fn find_curve<'a>(
    bundle: &'a DeskBundle,
    dataset: &str,
    mode: RespMode,
    protocol: Protocol,
) -> &'a ConvergenceCurve {
    bundle
        .curves
        .iter()
        .find(|c| c.dataset == dataset && c.mode == mode && c.protocol == protocol)
        .expect("cell exists")
}

/// One uniform draw in [lo, hi).
fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> Dataset {
    // Coordinates in [scale, 3*scale]: strictly positive, so per-coordinate
    // relative error against an independent recomputation is well defined.
    let pts: Vec<f64> = (0..n * d).map(|_| scale * uniform(rng, 1.0, 3.0)).collect();
    Dataset::new(n, d, pts).unwrap()
}

fn random_centroids(rng: &mut ChaCha8Rng, k: usize, d: usize, scale: f64) -> Centroids {
    let pts: Vec<f64> = (0..k * d).map(|_| scale * uniform(rng, 1.0, 3.0)).collect();
    Centroids::new(k, d, pts).unwrap()
}

#[test]
fn gate_01_soft_step_is_the_weighted_mean() {
    let _g = lock();
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let n = rng.random_range(5..40);
        let d = rng.random_range(1..4);
        let k = rng.random_range(2..6);
        let scale = 10f64.powf(uniform(&mut rng, 0.0, 2.0));
        let x = random_dataset(&mut rng, n, d, scale);
        let mu = random_centroids(&mut rng, k, d, scale);
        let sigma = scale * 10f64.powf(uniform(&mut rng, -3.0, 0.0));
        let t = Temperature::new(sigma).unwrap();
        let mode = if trial % 2 == 0 { RespMode::Softmax } else { RespMode::Entmax15 };

        let (stepped, _, _) = softrbf_step(&x, &mu, t, mode).unwrap();

        // Independent recomputation of w_j / r_j, accumulated cluster-major
        // instead of point-major.
        let resp = responsibilities(&pairwise_sq_distances(&x, &mu).unwrap(), t, mode).unwrap();
        for j in 0..k {
            let mut r = 0.0;
            let mut w = vec![0.0; d];
            for i in 0..n {
                let rij = resp.get(i, j);
                r += rij;
                for c in 0..d {
                    w[c] += rij * x.point(i)[c];
                }
            }
            let expected: Vec<f64> = if r > mass_floor(n) {
                w.iter().map(|v| v / r).collect()
            } else {
                mu.row(j).to_vec()
            };
            for c in 0..d {
                let rel = (stepped.row(j)[c] - expected[c]).abs() / expected[c].abs();
                worst = worst.max(rel);
            }
        }
    }
    let elapsed = started.elapsed();
    let pass = worst <= 1e-12 && elapsed < Duration::from_secs(1);
    report(
        " 1/10",
        "one soft step lands on the per-cluster weighted mean",
        pass,
        &format!("worst relative coordinate error {worst:.2e}, tol 1e-12; {elapsed:.1?} of 1s"),
    );
    assert!(worst <= 1e-12, "worst relative error {worst:e}");
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
}

#[test]
fn gate_02_cold_soft_step_matches_the_hard_update() {
    let _g = lock();
    let started = Instant::now();
    let x = generate(&GenSpec::new(DatasetKind::blobs(), DESK_N, DATA_SEED)).unwrap();
    let radius = x.radius();
    let t = Temperature::new(1e-3).unwrap();
    let mut worst: f64 = 0.0;
    for init_seed in [5, 6, 7] {
        let init = draw_init(&x, DESK_K, init_seed).unwrap();
        // Hard one-step oracle: assign to the nearest centroid, then take
        // plain per-cluster means, keeping empty clusters in place.
        let labels = hard_assign(&pairwise_sq_distances(&x, &init).unwrap());
        let mut count = vec![0usize; DESK_K];
        let mut sum = vec![0.0; DESK_K * 2];
        for i in 0..x.len() {
            let j = labels.label(i);
            count[j] += 1;
            for c in 0..2 {
                sum[j * 2 + c] += x.point(i)[c];
            }
        }
        for mode in [RespMode::Softmax, RespMode::Entmax15] {
            let (stepped, _, _) = softrbf_step(&x, &init, t, mode).unwrap();
            for j in 0..DESK_K {
                for c in 0..2 {
                    let hard = if count[j] > 0 {
                        sum[j * 2 + c] / count[j] as f64
                    } else {
                        init.row(j)[c]
                    };
                    worst = worst.max((stepped.row(j)[c] - hard).abs());
                }
            }
        }
    }
    let elapsed = started.elapsed();
    let tol = 1e-6 * radius;
    let pass = worst <= tol && elapsed < Duration::from_secs(1);
    report(
        " 2/10",
        "at sigma 1e-3 one soft step equals the hard mean update",
        pass,
        &format!("worst coordinate gap {worst:.2e}, tol {tol:.2e}; {elapsed:.1?} of 1s"),
    );
    assert!(worst <= tol, "worst gap {worst:e} exceeds {tol:e}");
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
}

#[test]
fn gate_03_collapse_is_rank_monotone_in_every_cell() {
    let _g = lock();
    let bundle = desk_bundle();
    assert_eq!(bundle.curves.len(), 16);
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for c in &bundle.curves {
        let rho = c.spearman();
        cells.push(format!(
            "{}/{}/{} rho={rho:.3}",
            c.dataset,
            c.mode.name(),
            c.protocol.name()
        ));
        if rho < 0.9 {
            failures.push(format!(
                "{}/{}/{} rho={rho:.3}",
                c.dataset,
                c.mode.name(),
                c.protocol.name()
            ));
        }
    }
    let within_budget = bundle.elapsed < Duration::from_secs(300);
    let pass = failures.is_empty() && within_budget;
    report(
        " 3/10",
        "discrepancy vs temperature has Spearman >= 0.9 in all 16 desk cells",
        pass,
        &format!(
            "{}/16 cells at or above 0.9, grid took {:.1?} of 300s single-threaded; {}",
            16 - failures.len(),
            bundle.elapsed,
            cells.join(", ")
        ),
    );
    assert!(within_budget, "desk grid took {:?}", bundle.elapsed);
    assert!(
        failures.is_empty(),
        "cells below 0.9: {}. The sparse map reaches exact collapse inside the schedule: \
         whole stretches of the cold end measure discrepancy 0.0 bit-for-bit, and tied ranks \
         cap the attainable correlation below the threshold on these cells.",
        failures.join(", ")
    );
}

#[test]
fn gate_04_soft_distortion_never_undercuts_hard() {
    let _g = lock();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0usize;
    let mut min_slack = f64::INFINITY;
    for _ in 0..1000 {
        let n = rng.random_range(4..30);
        let d = rng.random_range(1..4);
        let k = rng.random_range(2..6);
        let scale = 10f64.powf(uniform(&mut rng, -1.0, 2.0));
        let x = random_dataset(&mut rng, n, d, scale);
        let mu = random_centroids(&mut rng, k, d, scale);
        // Random dense rows on the simplex.
        let mut data = Vec::with_capacity(n * k);
        for _ in 0..n {
            let gammas: Vec<f64> = (0..k).map(|_| uniform(&mut rng, 1e-3, 1.0)).collect();
            let s: f64 = gammas.iter().sum();
            data.extend(gammas.iter().map(|g| g / s));
        }
        let resp = ResponsibilityMatrix::from_raw(n, k, data, RespMode::Softmax).unwrap();
        let soft = soft_distortion(&x, &mu, &resp).unwrap();
        let hard = hard_distortion(&x, &mu).unwrap();
        if soft < hard {
            violations += 1;
        }
        min_slack = min_slack.min(soft - hard);
    }
    let pass = violations == 0;
    report(
        " 4/10",
        "convex-combination distortion dominates the hard minimum exactly",
        pass,
        &format!("0 of 1000 instances below hard; smallest slack {min_slack:.3e}"),
    );
    assert_eq!(violations, 0, "soft fell below hard on {violations} instances");
}

/// Independent root-finder for the sparse transform: on half logits
/// s = z/2, the threshold tau solves sum_i [s_i - tau]_+^2 = 1, which is
/// strictly decreasing in tau with a root inside [max(s) - 1, max(s)].
fn entmax_bisection_oracle(z: &[f64]) -> Vec<f64> {
    let s: Vec<f64> = z.iter().map(|v| v / 2.0).collect();
    let smax = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mass = |tau: f64| -> f64 {
        s.iter()
            .map(|&si| {
                let t = si - tau;
                if t > 0.0 {
                    t * t
                } else {
                    0.0
                }
            })
            .sum()
    };
    let mut lo = smax - 1.0;
    let mut hi = smax;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    s.iter()
        .map(|&si| {
            let t = si - tau;
            if t > 0.0 {
                t * t
            } else {
                0.0
            }
        })
        .collect()
}

#[test]
fn gate_05_exact_entmax_matches_the_bisection_oracle() {
    let _g = lock();
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let mut worst_comp: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    for _ in 0..10_000 {
        let k = rng.random_range(2..17);
        let spread = 10f64.powf(uniform(&mut rng, -1.0, 1.0));
        let mut z: Vec<f64> = (0..k).map(|_| spread * uniform(&mut rng, -3.0, 3.0)).collect();
        let coin = rng.random::<f64>();
        if coin < 0.1 {
            // exact ties exercise the sorted-prefix walk
            z[1] = z[0];
        } else if coin < 0.2 {
            // a dominant logit exercises the one-hot corner
            z[0] += 6.0;
        }
        let got = entmax15(&z);
        let want = entmax_bisection_oracle(&z);
        for (g, w) in got.iter().zip(&want) {
            worst_comp = worst_comp.max((g - w).abs());
        }
        worst_sum = worst_sum.max((got.iter().sum::<f64>() - 1.0).abs());
    }
    let elapsed = started.elapsed();
    let pass = worst_comp <= 1e-8 && worst_sum <= 1e-10 && elapsed < Duration::from_secs(10);
    report(
        " 5/10",
        "closed-form sparse transform agrees with bisection on 10k vectors",
        pass,
        &format!(
            "worst component gap {worst_comp:.2e} (tol 1e-8), worst simplex error {worst_sum:.2e} (tol 1e-10); {elapsed:.1?} of 10s"
        ),
    );
    assert!(worst_comp <= 1e-8, "component gap {worst_comp:e}");
    assert!(worst_sum <= 1e-10, "simplex sum error {worst_sum:e}");
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
}

#[test]
fn gate_06_cold_responsibilities_follow_the_hard_assignment() {
    let _g = lock();
    let x = generate(&GenSpec::new(DatasetKind::blobs(), DESK_N, DATA_SEED)).unwrap();
    let km = best_kmeans(&x, DESK_K, 10, MASTER_SEED, 150).unwrap();
    let stats = separation_stats(&x, &km);
    assert!(
        stats.gamma_min > 0.5,
        "fixture must be margin separated, got gamma_min {}",
        stats.gamma_min
    );
    let t = Temperature::new(1e-3).unwrap();
    let dm = pairwise_sq_distances(&x, &km.centroids).unwrap();
    let mut argmax_mismatches = 0usize;
    let mut fractional_rows = 0usize;
    for mode in [RespMode::Softmax, RespMode::Entmax15] {
        let resp = responsibilities(&dm, t, mode).unwrap();
        for i in 0..x.len() {
            if resp.argmax_row(i) != km.labels.label(i) {
                argmax_mismatches += 1;
            }
            if mode == RespMode::Entmax15 && resp.row(i).iter().any(|&v| v != 0.0 && v != 1.0) {
                fractional_rows += 1;
            }
        }
    }
    let pass = argmax_mismatches == 0 && fractional_rows == 0;
    report(
        " 6/10",
        "at sigma 1e-3 both maps argmax-agree with hard labels; sparse rows are one-hot",
        pass,
        &format!(
            "gamma_min {:.3} (> 0.5), {argmax_mismatches} argmax mismatches, {fractional_rows} fractional sparse rows over {} points",
            stats.gamma_min,
            x.len()
        ),
    );
    assert_eq!(argmax_mismatches, 0);
    assert_eq!(fractional_rows, 0);
}

#[test]
fn gate_07_exponential_bound_holds_under_the_mass_condition() {
    let _g = lock();
    let schedule = SigmaSchedule::new(1e-3, 1e-1, 50).unwrap();
    let mut violations = Vec::new();
    let mut applicable = 0usize;
    let mut skipped_mass = 0usize;
    for seed in 0..20 {
        let x = generate(&GenSpec::new(DatasetKind::blobs(), DESK_N, seed)).unwrap();
        let km = best_kmeans(&x, DESK_K, 10, seed, 150).unwrap();
        let stats = separation_stats(&x, &km);
        for &sigma in schedule.values() {
            let t = Temperature::new(sigma).unwrap();
            let dev = soft_centroid_deviation(&x, &km, t, RespMode::Softmax).unwrap();
            let rep = check_bounds(&stats, DESK_K, sigma, dev.max_dev, RespMode::Softmax, dev.mass_ok);
            if rep.applicable {
                applicable += 1;
                if rep.passed == Some(false) {
                    violations.push(format!(
                        "seed {seed} sigma {sigma:.4e}: dev {:.3e} > bound {:.3e}",
                        rep.deviation,
                        rep.bound.unwrap()
                    ));
                }
            } else if !rep.vacuous {
                skipped_mass += 1;
            }
        }
    }
    let pass = violations.is_empty() && applicable > 0;
    report(
        " 7/10",
        "one-step deviation stays under the exponential ceiling (20 seeds)",
        pass,
        &format!(
            "{applicable} applicable checks, {skipped_mass} outside the mass condition, {} violations",
            violations.len()
        ),
    );
    assert!(applicable > 0, "the mass condition never held; nothing was checked");
    assert!(violations.is_empty(), "{}", violations.join("; "));
}

#[test]
fn gate_08_sparse_rate_slope_and_deviation_ratio() {
    let _g = lock();
    let bundle = desk_bundle();
    let mut parts = Vec::new();
    let mut ok = true;

    for dataset in ["blobs", "circles"] {
        let curve = find_curve(bundle, dataset, RespMode::Entmax15, Protocol::Fixed);
        match loglog_fit_lower_half(curve) {
            Ok(fit) => {
                let in_band = (0.8..=3.0).contains(&fit.m);
                ok &= in_band;
                parts.push(format!(
                    "{dataset} slope m={:.3} (band [0.8, 3.0], r2={:.2}, {} pts{})",
                    fit.m,
                    fit.r2,
                    fit.points_used,
                    if in_band { "" } else { "; out of band" }
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{dataset} slope unfittable: {e}"));
            }
        }
    }

    let schedule = SigmaSchedule::new(1e-3, 1e-1, 50).unwrap();
    let half = schedule.lower_half();
    for dataset in ["blobs", "circles"] {
        let kind = if dataset == "blobs" {
            DatasetKind::blobs()
        } else {
            DatasetKind::circles()
        };
        let x = generate(&GenSpec::new(kind, DESK_N, DATA_SEED)).unwrap();
        let km = best_kmeans(&x, DESK_K, 10, MASTER_SEED, 150).unwrap();
        let mut rmin = f64::INFINITY;
        let mut rmax: f64 = 0.0;
        for &sigma in &schedule.values()[half.clone()] {
            let t = Temperature::new(sigma).unwrap();
            let dev = soft_centroid_deviation(&x, &km, t, RespMode::Entmax15).unwrap();
            let ratio = dev.max_dev / sigma;
            rmin = rmin.min(ratio);
            rmax = rmax.max(ratio);
        }
        if rmin > 0.0 && rmax / rmin <= 50.0 {
            parts.push(format!("{dataset} dev/sigma spread {:.1}x (cap 50x)", rmax / rmin));
        } else if rmin == 0.0 {
            ok = false;
            parts.push(format!(
                "{dataset} dev/sigma spread undefined: exact zero deviations in the cold half (max ratio {rmax:.2e})"
            ));
        } else {
            ok = false;
            parts.push(format!("{dataset} dev/sigma spread {:.1}x exceeds 50x", rmax / rmin));
        }
    }

    report(
        " 8/10",
        "sparse-mode cold-half rate: slope in band and bounded dev/sigma spread",
        ok,
        &parts.join("; "),
    );
    assert!(
        ok,
        "{}. In the cold half-schedule the sparse map is already exactly hard on these \
         fixtures: discrepancies and one-step deviations are 0.0 bit-for-bit, so a log-log \
         slope has no support and the ratio spread divides by zero.",
        parts.join("; ")
    );
}

#[test]
fn gate_09_rate_fitter_recovers_synthetic_power_laws() {
    let _g = lock();
    let schedule = SigmaSchedule::new(1e-3, 1e-1, 50).unwrap();
    let mut worst_m: f64 = 0.0;
    let mut worst_b: f64 = 0.0;
    for &m in &[0.5, 1.0, 2.0] {
        for &c in &[0.25, 1.0, 7.5] {
            let rs: Vec<f64> = schedule.values().iter().map(|s| c * s.powf(m)).collect();
            let fit = fit_power_law(schedule.values(), &rs).unwrap();
            worst_m = worst_m.max((fit.m - m).abs());
            worst_b = worst_b.max((fit.b - c.ln()).abs());
        }
    }
    let pass = worst_m <= 1e-9 && worst_b <= 1e-9;
    report(
        " 9/10",
        "log-log fitter recovers exponents 0.5, 1, 2 and their prefactors",
        pass,
        &format!("worst exponent error {worst_m:.2e}, worst ln-prefactor error {worst_b:.2e}, tol 1e-9"),
    );
    assert!(worst_m <= 1e-9, "exponent error {worst_m:e}");
    assert!(worst_b <= 1e-9, "prefactor error {worst_b:e}");
}

const WORKER_SWEEP: &str = r#"
k = 3
iters = 40
runs = 4
sigma_min = 1e-3
sigma_max = 1e-1
schedule_len = 6
protocol = "resampled"
modes = ["softmax", "entmax15"]
master_seed = 11

[[datasets]]
kind = "blobs"
n = 90
seed = 2

[[datasets]]
kind = "moons"
n = 90
seed = 2
"#;

#[test]
fn gate_10_lloyd_descends_and_workers_do_not_change_results() {
    let _g = lock();

    // Every benchmark run must have a non-increasing distortion trace.
    let mut upticks = 0usize;
    let mut runs = 0usize;
    for kind in [
        DatasetKind::blobs(),
        DatasetKind::moons(),
        DatasetKind::spiral(),
        DatasetKind::circles(),
    ] {
        let x = generate(&GenSpec::new(kind, DESK_N, DATA_SEED)).unwrap();
        for init_seed in 0..10 {
            let init = draw_init(&x, DESK_K, init_seed).unwrap();
            let km = kmeans(&x, &init, 150, default_tol(&x)).unwrap();
            runs += 1;
            upticks += km
                .distortion_history
                .windows(2)
                .filter(|w| w[1] > w[0])
                .count();
        }
    }

    // The worker pool must not leak into results: identical bytes for 1 and
    // 8 workers, via the real binary.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, WORKER_SWEEP).unwrap();
    let mut mismatched_files = Vec::new();
    let outs = [dir.path().join("w1"), dir.path().join("w8")];
    for (out, workers) in outs.iter().zip(["1", "8"]) {
        let status = Command::new(env!("CARGO_BIN_EXE_softvoronoi"))
            .env_remove("SOFTVORONOI_SEED")
            .args(["sweep", "--workers", workers, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .expect("binary runs");
        assert!(status.success());
    }
    let mut compared = 0usize;
    for entry in fs::read_dir(&outs[0]).unwrap() {
        let name = entry.unwrap().file_name();
        if name == "manifest.json" {
            // identical except wall-clock duration, so not byte-compared
            continue;
        }
        compared += 1;
        let a = fs::read(outs[0].join(&name)).unwrap();
        let b = fs::read(outs[1].join(&name)).unwrap();
        if a != b {
            mismatched_files.push(name.to_string_lossy().into_owned());
        }
    }

    let pass = upticks == 0 && mismatched_files.is_empty() && compared == 12;
    report(
        "10/10",
        "Lloyd monotone on all benchmark runs; worker count never changes bytes",
        pass,
        &format!(
            "{runs} runs with {upticks} distortion upticks; {compared} sweep files byte-compared across --workers 1 vs 8, {} mismatched",
            mismatched_files.len()
        ),
    );
    assert_eq!(upticks, 0, "distortion increased within a run");
    assert_eq!(compared, 12, "expected 2 datasets x 2 modes x (curve+ratefit+bounds)");
    assert!(mismatched_files.is_empty(), "differing files: {mismatched_files:?}");
}
