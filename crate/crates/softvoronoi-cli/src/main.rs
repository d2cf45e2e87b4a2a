//! Command-line driver: dataset generation, single-shot clustering, and
//! temperature-sweep experiment grids with reproducible run manifests.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use softvoronoi::assign::{RespMode, Temperature};
use softvoronoi::cluster::{default_tol, kmeans, softrbf_fit};
use softvoronoi::evalharness::{
    best_kmeans, check_bounds, draw_init, loglog_fit, loglog_fit_lower_half, run_experiment,
    separation_stats, soft_centroid_deviation, BoundReport, ExperimentConfig, Protocol, RateFit,
    SeparationStats,
};
use softvoronoi::geometry::Centroids;
use softvoronoi::synthdata::{generate, load_csv, save_csv, DatasetKind, GenSpec};

const ENV_SEED: &str = "SOFTVORONOI_SEED";
/// Restarts behind the reference solution used for bound reports.
const BOUND_RESTARTS: usize = 10;

#[derive(Parser)]
#[command(
    name = "softvoronoi",
    version,
    about = "Soft RBF clustering and its hard K-Means limit"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic 2-d benchmark dataset as CSV.
    Generate(GenerateArgs),
    /// Run one clustering algorithm on a dataset CSV.
    Cluster(ClusterArgs),
    /// Run a temperature-sweep experiment grid from a TOML config.
    Sweep(SweepArgs),
}

#[derive(clap::Args)]
struct GenerateArgs {
    /// Dataset family.
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Number of points.
    #[arg(long, default_value_t = 300)]
    n: usize,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; a manifest lands next to it.
    #[arg(long)]
    out: PathBuf,
    /// Cluster count (blobs only).
    #[arg(long)]
    centers: Option<usize>,
    /// Within-cluster standard deviation (blobs only).
    #[arg(long, allow_negative_numbers = true)]
    spread: Option<f64>,
    /// Additive Gaussian noise level (moons, spiral, circles).
    #[arg(long, allow_negative_numbers = true)]
    noise: Option<f64>,
    /// Outer arm radius (spiral only).
    #[arg(long, allow_negative_numbers = true)]
    radius: Option<f64>,
    /// Number of revolutions (spiral only).
    #[arg(long, allow_negative_numbers = true)]
    turns: Option<f64>,
    /// Inner/outer radius ratio (circles only).
    #[arg(long, allow_negative_numbers = true)]
    factor: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "lowercase")]
enum KindArg {
    Blobs,
    Moons,
    Spiral,
    Circles,
}

#[derive(clap::Args)]
struct ClusterArgs {
    /// Input dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Algorithm to run.
    #[arg(long, value_enum)]
    algo: AlgoArg,
    /// Number of clusters.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Temperature (softrbf only).
    #[arg(long, required_if_eq("algo", "softrbf"), allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Responsibility map (softrbf only).
    #[arg(long, value_enum, required_if_eq("algo", "softrbf"))]
    mode: Option<ModeArg>,
    /// Iteration budget.
    #[arg(long, default_value_t = 150)]
    iters: usize,
    /// Seed for the initial centroid draw.
    #[arg(long, default_value_t = 0)]
    init_seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "lowercase")]
enum AlgoArg {
    Kmeans,
    Softrbf,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "lowercase")]
enum ModeArg {
    Softmax,
    Entmax15,
}

impl From<ModeArg> for RespMode {
    fn from(m: ModeArg) -> RespMode {
        match m {
            ModeArg::Softmax => RespMode::Softmax,
            ModeArg::Entmax15 => RespMode::Entmax15,
        }
    }
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Experiment grid config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for the grid (default: all cores). Results do not
    /// depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed override; precedence flag > config file > SOFTVORONOI_SEED
    /// env var > 0.
    #[arg(long)]
    master_seed: Option<u64>,
}

/// Declarative sweep grid: the cross product of datasets and modes under one
/// protocol. Scalar fields default to the canonical experiment sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    datasets: Vec<GenSpec>,
    #[serde(default = "default_k")]
    k: usize,
    #[serde(default = "default_iters")]
    iters: usize,
    #[serde(default = "default_runs")]
    runs: usize,
    #[serde(default = "default_sigma_min")]
    sigma_min: f64,
    #[serde(default = "default_sigma_max")]
    sigma_max: f64,
    #[serde(default = "default_schedule_len")]
    schedule_len: usize,
    #[serde(default = "default_modes")]
    modes: Vec<RespMode>,
    protocol: Protocol,
    #[serde(default)]
    master_seed: Option<u64>,
}

fn default_k() -> usize {
    3
}
fn default_iters() -> usize {
    150
}
fn default_runs() -> usize {
    200
}
fn default_sigma_min() -> f64 {
    1e-3
}
fn default_sigma_max() -> f64 {
    1e-1
}
fn default_schedule_len() -> usize {
    50
}
fn default_modes() -> Vec<RespMode> {
    vec![RespMode::Softmax, RespMode::Entmax15]
}

enum CmdError {
    /// Bad flags or config content; exit code 2.
    Usage(String),
    /// Failure while doing the work; exit code 1.
    Runtime(String),
}

fn usage(e: impl std::fmt::Display) -> CmdError {
    CmdError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CmdError {
    CmdError::Runtime(e.to_string())
}

#[derive(Serialize)]
struct RngIdentifiers {
    bit_generator: &'static str,
    seed_derivation: &'static str,
    init_scheme: &'static str,
}

fn rng_identifiers() -> RngIdentifiers {
    RngIdentifiers {
        bit_generator: "ChaCha8",
        seed_derivation: "SplitMix64 finalizer chained over (master, stream, sigma index, trial index)",
        init_scheme: "k uniform draws in the data bounding box",
    }
}

#[derive(Default, Serialize)]
struct Diagnostics {
    zero_mass_events: usize,
    renormalized_rows: usize,
}

/// Emitted alongside every command's outputs; `config` round-trips through
/// serde losslessly.
#[derive(Serialize)]
struct RunManifest<C: Serialize> {
    command: &'static str,
    library_version: &'static str,
    rng: RngIdentifiers,
    config: C,
    duration_seconds: f64,
    diagnostics: Diagnostics,
    outputs: Vec<String>,
}

impl<C: Serialize> RunManifest<C> {
    fn new(
        command: &'static str,
        config: C,
        started: Instant,
        diagnostics: Diagnostics,
        outputs: Vec<String>,
    ) -> Self {
        RunManifest {
            command,
            library_version: softvoronoi::VERSION,
            rng: rng_identifiers(),
            config,
            duration_seconds: started.elapsed().as_secs_f64(),
            diagnostics,
            outputs,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Generate(a) => cmd_generate(a),
        Cmd::Cluster(a) => cmd_cluster(a),
        Cmd::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Applies kind-specific flag overrides, rejecting flags foreign to the kind.
fn build_kind(a: &GenerateArgs) -> Result<DatasetKind, CmdError> {
    let mut kind = match a.kind {
        KindArg::Blobs => DatasetKind::blobs(),
        KindArg::Moons => DatasetKind::moons(),
        KindArg::Spiral => DatasetKind::spiral(),
        KindArg::Circles => DatasetKind::circles(),
    };
    let name = kind.name();
    let foreign =
        move |flag: &str| CmdError::Usage(format!("--{flag} does not apply to kind {name}"));
    if let Some(v) = a.centers {
        match &mut kind {
            DatasetKind::Blobs { centers, .. } => *centers = v,
            _ => return Err(foreign("centers")),
        }
    }
    if let Some(v) = a.spread {
        match &mut kind {
            DatasetKind::Blobs { spread, .. } => *spread = v,
            _ => return Err(foreign("spread")),
        }
    }
    if let Some(v) = a.noise {
        match &mut kind {
            DatasetKind::Moons { noise }
            | DatasetKind::Spiral { noise, .. }
            | DatasetKind::Circles { noise, .. } => *noise = v,
            _ => return Err(foreign("noise")),
        }
    }
    if let Some(v) = a.radius {
        match &mut kind {
            DatasetKind::Spiral { radius, .. } => *radius = v,
            _ => return Err(foreign("radius")),
        }
    }
    if let Some(v) = a.turns {
        match &mut kind {
            DatasetKind::Spiral { turns, .. } => *turns = v,
            _ => return Err(foreign("turns")),
        }
    }
    if let Some(v) = a.factor {
        match &mut kind {
            DatasetKind::Circles { factor, .. } => *factor = v,
            _ => return Err(foreign("factor")),
        }
    }
    Ok(kind)
}

fn cmd_generate(a: GenerateArgs) -> Result<(), CmdError> {
    let started = Instant::now();
    let kind = build_kind(&a)?;
    let spec = GenSpec::new(kind, a.n, a.seed);
    // Bad parameter values (negative noise, zero centers, ...) are config
    // errors, not runtime ones.
    let x = generate(&spec).map_err(usage)?;
    save_csv(&x, &a.out).map_err(runtime)?;
    let manifest = RunManifest::new(
        "generate",
        spec,
        started,
        Diagnostics::default(),
        vec![display_path(&a.out)],
    );
    write_text(&a.out.with_extension("manifest.json"), &to_json(&manifest))
}

/// Config snapshot for single-shot clustering runs.
#[derive(Serialize)]
struct ClusterSnapshot {
    data: String,
    algo: &'static str,
    k: usize,
    sigma: Option<f64>,
    mode: Option<&'static str>,
    iters: usize,
    init_seed: u64,
}

fn cmd_cluster(a: ClusterArgs) -> Result<(), CmdError> {
    let started = Instant::now();
    if a.k == 0 {
        return Err(CmdError::Usage("--k must be at least 1".into()));
    }
    let x = load_csv(&a.data).map_err(runtime)?;
    // Too few points for k is a property of the input data, so exit 1.
    let init = draw_init(&x, a.k, a.init_seed).map_err(runtime)?;
    std::fs::create_dir_all(&a.out).map_err(runtime)?;

    let mut outputs = Vec::new();
    let mut diagnostics = Diagnostics::default();
    let (algo, sigma, mode_name);
    match a.algo {
        AlgoArg::Kmeans => {
            algo = "kmeans";
            sigma = None;
            mode_name = None;
            let km = kmeans(&x, &init, a.iters, default_tol(&x)).map_err(runtime)?;
            outputs.push(write_centroids_csv(&a.out.join("centroids.csv"), &km.centroids)?);
            let mut labels = String::from("label\n");
            for i in 0..km.labels.len() {
                labels.push_str(&format!("{}\n", km.labels.label(i)));
            }
            write_text(&a.out.join("labels.csv"), &labels)?;
            outputs.push(display_path(&a.out.join("labels.csv")));
            outputs.push(write_loss_csv(&a.out.join("loss.csv"), &km.distortion_history)?);
        }
        AlgoArg::Softrbf => {
            algo = "softrbf";
            // Both flags are enforced by required_if_eq.
            let s = a.sigma.expect("clap enforces --sigma for softrbf");
            let m = RespMode::from(a.mode.expect("clap enforces --mode for softrbf"));
            sigma = Some(s);
            mode_name = Some(m.name());
            let t = Temperature::new(s).map_err(usage)?;
            let res = softrbf_fit(&x, &init, t, a.iters, m).map_err(runtime)?;
            diagnostics.zero_mass_events = res.zero_mass_events;
            diagnostics.renormalized_rows = res.renormalized_rows;
            outputs.push(write_centroids_csv(&a.out.join("centroids.csv"), &res.centroids)?);
            let mut resp = String::new();
            let cols: Vec<String> = (0..a.k).map(|j| format!("r{j}")).collect();
            resp.push_str(&cols.join(","));
            resp.push('\n');
            for i in 0..res.responsibilities.n() {
                let row: Vec<String> =
                    res.responsibilities.row(i).iter().map(|v| format!("{v}")).collect();
                resp.push_str(&row.join(","));
                resp.push('\n');
            }
            write_text(&a.out.join("responsibilities.csv"), &resp)?;
            outputs.push(display_path(&a.out.join("responsibilities.csv")));
            outputs.push(write_loss_csv(&a.out.join("loss.csv"), &res.loss_history)?);
        }
    }

    let snapshot = ClusterSnapshot {
        data: display_path(&a.data),
        algo,
        k: a.k,
        sigma,
        mode: mode_name,
        iters: a.iters,
        init_seed: a.init_seed,
    };
    let manifest = RunManifest::new("cluster", snapshot, started, diagnostics, outputs);
    write_text(&a.out.join("manifest.json"), &to_json(&manifest))
}

/// Rate fits for one curve; a fit that cannot run (no positive points in the
/// window) reports its reason instead.
#[derive(Serialize)]
struct FitReportFile {
    dataset: String,
    mode: &'static str,
    protocol: &'static str,
    spearman: f64,
    full: FitSlot,
    lower_half: FitSlot,
}

#[derive(Serialize)]
struct FitSlot {
    fit: Option<RateFit>,
    error: Option<String>,
}

fn fit_slot(r: softvoronoi::Result<RateFit>) -> FitSlot {
    match r {
        Ok(fit) => FitSlot {
            fit: Some(fit),
            error: None,
        },
        Err(e) => FitSlot {
            fit: None,
            error: Some(e.to_string()),
        },
    }
}

/// Deviation-bound checks across the schedule, against one reference
/// K-Means solution.
#[derive(Serialize)]
struct BoundReportFile {
    dataset: String,
    mode: &'static str,
    protocol: &'static str,
    restarts: usize,
    stats: SeparationStats,
    reports: Vec<BoundReport>,
}

struct CellFiles {
    files: Vec<(String, String)>,
    zero_mass_events: usize,
    renormalized_rows: usize,
}

fn run_cell(cell: &ExperimentConfig, name: &str) -> Result<CellFiles, CmdError> {
    cell.validate().map_err(usage)?;
    let curve = run_experiment(cell).map_err(runtime)?;
    let fits = FitReportFile {
        dataset: curve.dataset.clone(),
        mode: cell.mode.name(),
        protocol: cell.protocol.name(),
        spearman: curve.spearman(),
        full: fit_slot(loglog_fit(&curve)),
        lower_half: fit_slot(loglog_fit_lower_half(&curve)),
    };

    let x = generate(&cell.dataset).map_err(runtime)?;
    let km = best_kmeans(&x, cell.k, BOUND_RESTARTS, cell.master_seed, cell.iters)
        .map_err(runtime)?;
    let stats = separation_stats(&x, &km);
    let schedule = cell.schedule().map_err(usage)?;
    let reports = schedule
        .values()
        .iter()
        .map(|&s| {
            let t = Temperature::new(s)?;
            let dev = soft_centroid_deviation(&x, &km, t, cell.mode)?;
            Ok(check_bounds(&stats, cell.k, s, dev.max_dev, cell.mode, dev.mass_ok))
        })
        .collect::<softvoronoi::Result<Vec<_>>>()
        .map_err(runtime)?;
    let bounds = BoundReportFile {
        dataset: curve.dataset.clone(),
        mode: cell.mode.name(),
        protocol: cell.protocol.name(),
        restarts: BOUND_RESTARTS,
        stats,
        reports,
    };

    Ok(CellFiles {
        files: vec![
            (format!("curve_{name}.csv"), curve.to_csv_string()),
            (format!("ratefit_{name}.json"), to_json(&fits)),
            (format!("bounds_{name}.json"), to_json(&bounds)),
        ],
        zero_mass_events: curve.zero_mass_events,
        renormalized_rows: curve.renormalized_rows,
    })
}

fn cmd_sweep(a: SweepArgs) -> Result<(), CmdError> {
    let started = Instant::now();
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| CmdError::Runtime(format!("{}: {e}", a.config.display())))?;
    let file_cfg: SweepConfig =
        toml::from_str(&text).map_err(|e| CmdError::Usage(format!("{}: {e}", a.config.display())))?;
    check_dataset_keys(&text).map_err(|msg| CmdError::Usage(format!("{}: {msg}", a.config.display())))?;

    if file_cfg.datasets.is_empty() {
        return Err(CmdError::Usage("config needs at least one [[datasets]] entry".into()));
    }
    if file_cfg.modes.is_empty() {
        return Err(CmdError::Usage("config needs at least one responsibility mode".into()));
    }
    if file_cfg.modes.contains(&RespMode::Hard) {
        return Err(CmdError::Usage(
            "mode `hard` is not sweepable; use softmax or entmax15".into(),
        ));
    }

    let env_seed = match std::env::var(ENV_SEED) {
        Ok(s) => Some(s.parse::<u64>().map_err(|_| {
            CmdError::Usage(format!("{ENV_SEED} must be an unsigned integer, got {s:?}"))
        })?),
        Err(_) => None,
    };
    let master = a
        .master_seed
        .or(file_cfg.master_seed)
        .or(env_seed)
        .unwrap_or(0);
    let cfg = SweepConfig {
        master_seed: Some(master),
        ..file_cfg
    };

    // Cell names: dataset kind, disambiguated by position when a kind
    // repeats in the list.
    let mut kind_counts = std::collections::HashMap::new();
    for ds in &cfg.datasets {
        *kind_counts.entry(ds.kind.name()).or_insert(0usize) += 1;
    }
    let mut cells = Vec::new();
    for (di, ds) in cfg.datasets.iter().enumerate() {
        let ds_name = if kind_counts[ds.kind.name()] > 1 {
            format!("{}-{}", ds.kind.name(), di)
        } else {
            ds.kind.name().to_string()
        };
        for &mode in &cfg.modes {
            let cell = ExperimentConfig {
                dataset: ds.clone(),
                k: cfg.k,
                iters: cfg.iters,
                runs: cfg.runs,
                sigma_min: cfg.sigma_min,
                sigma_max: cfg.sigma_max,
                schedule_len: cfg.schedule_len,
                mode,
                protocol: cfg.protocol,
                master_seed: master,
            };
            let name = format!("{}_{}_{}", ds_name, mode.name(), cfg.protocol.name());
            cells.push((cell, name));
        }
    }

    std::fs::create_dir_all(&a.out).map_err(runtime)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.workers.unwrap_or(0))
        .build()
        .map_err(runtime)?;

    // Cells run one after another; each experiment parallelizes its own grid
    // on the pool and reduces in deterministic order. Writing stays on this
    // thread.
    let mut outputs = Vec::new();
    let mut diagnostics = Diagnostics::default();
    for (cell, name) in &cells {
        let produced = pool.install(|| run_cell(cell, name))?;
        diagnostics.zero_mass_events += produced.zero_mass_events;
        diagnostics.renormalized_rows += produced.renormalized_rows;
        for (fname, content) in produced.files {
            let path = a.out.join(&fname);
            write_text(&path, &content)?;
            outputs.push(fname);
        }
    }

    let manifest = RunManifest::new("sweep", cfg, started, diagnostics, outputs);
    write_text(&a.out.join("manifest.json"), &to_json(&manifest))
}

/// Unknown keys inside a [[datasets]] entry would be swallowed by the
/// flattened kind parser, so typos are caught against an explicit allowlist.
fn check_dataset_keys(text: &str) -> Result<(), String> {
    let raw: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
    let Some(toml::Value::Array(arr)) = raw.get("datasets") else {
        return Ok(());
    };
    for (i, entry) in arr.iter().enumerate() {
        let Some(table) = entry.as_table() else {
            continue;
        };
        let kind = table.get("kind").and_then(|k| k.as_str()).unwrap_or("");
        let allowed: &[&str] = match kind {
            "blobs" => &["kind", "n", "seed", "centers", "spread"],
            "moons" => &["kind", "n", "seed", "noise"],
            "spiral" => &["kind", "n", "seed", "radius", "turns", "noise"],
            "circles" => &["kind", "n", "seed", "factor", "noise"],
            // unknown kinds are reported by the typed parse
            _ => continue,
        };
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(format!("unknown field `{key}` in datasets[{i}] ({kind})"));
            }
        }
    }
    Ok(())
}

fn display_path(p: &Path) -> String {
    p.display().to_string()
}

fn write_text(path: &Path, text: &str) -> Result<(), CmdError> {
    std::fs::write(path, text).map_err(|e| CmdError::Runtime(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("all output types serialize");
    s.push('\n');
    s
}

/// Same layout as dataset CSVs: x0..x{d-1} header, shortest round-trip
/// decimal values.
fn write_centroids_csv(path: &Path, mu: &Centroids) -> Result<String, CmdError> {
    let cols: Vec<String> = (0..mu.dim()).map(|c| format!("x{c}")).collect();
    let mut s = cols.join(",");
    s.push('\n');
    for j in 0..mu.k() {
        let row: Vec<String> = mu.row(j).iter().map(|v| format!("{v}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    write_text(path, &s)?;
    Ok(display_path(path))
}

fn write_loss_csv(path: &Path, history: &[f64]) -> Result<String, CmdError> {
    let mut s = String::from("loss\n");
    for v in history {
        s.push_str(&format!("{v}\n"));
    }
    write_text(path, &s)?;
    Ok(display_path(path))
}
