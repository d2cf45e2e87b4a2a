//! Seeded generators for four planar benchmark geometries, plus CSV I/O.
//!
//! Generation is a pure function of the `GenSpec`: the RNG is ChaCha8 seeded
//! directly from `seed`, and draw order is fixed (cluster-major, then
//! coordinate order), so a `GenSpec` reproduces its dataset bit for bit on
//! any platform.

use crate::geometry::Dataset;
use crate::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

fn default_centers() -> usize {
    3
}
fn default_spread() -> f64 {
    0.5
}
fn default_noise() -> f64 {
    0.05
}
fn default_spiral_radius() -> f64 {
    3.0
}
fn default_turns() -> f64 {
    1.0
}
fn default_factor() -> f64 {
    0.5
}
fn default_n() -> usize {
    300
}

/// Geometry family and its shape parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetKind {
    /// Isotropic Gaussian lumps centered on a circle of radius 4.
    Blobs {
        #[serde(default = "default_centers")]
        centers: usize,
        #[serde(default = "default_spread")]
        spread: f64,
    },
    /// Two interleaved unit half-circles, the second reflected and offset
    /// to (1, 0.5) - (cos t, sin t).
    Moons {
        #[serde(default = "default_noise")]
        noise: f64,
    },
    /// Three Archimedean arms; arm radius grows 0 to `radius` over
    /// `turns` full revolutions.
    Spiral {
        #[serde(default = "default_spiral_radius")]
        radius: f64,
        #[serde(default = "default_turns")]
        turns: f64,
        #[serde(default = "default_noise")]
        noise: f64,
    },
    /// Concentric rings of radius 1 and `factor`.
    Circles {
        #[serde(default = "default_factor")]
        factor: f64,
        #[serde(default = "default_noise")]
        noise: f64,
    },
}

impl DatasetKind {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetKind::Blobs { .. } => "blobs",
            DatasetKind::Moons { .. } => "moons",
            DatasetKind::Spiral { .. } => "spiral",
            DatasetKind::Circles { .. } => "circles",
        }
    }

    pub fn blobs() -> Self {
        DatasetKind::Blobs {
            centers: default_centers(),
            spread: default_spread(),
        }
    }
    pub fn moons() -> Self {
        DatasetKind::Moons {
            noise: default_noise(),
        }
    }
    pub fn spiral() -> Self {
        DatasetKind::Spiral {
            radius: default_spiral_radius(),
            turns: default_turns(),
            noise: default_noise(),
        }
    }
    pub fn circles() -> Self {
        DatasetKind::Circles {
            factor: default_factor(),
            noise: default_noise(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, msg: String| Error::InvalidGenParam { field, msg };
        match *self {
            DatasetKind::Blobs { centers, spread } => {
                if centers == 0 {
                    return Err(bad("centers", "must be at least 1".into()));
                }
                if !(spread.is_finite() && spread >= 0.0) {
                    return Err(bad("spread", format!("must be finite and >= 0, got {spread}")));
                }
            }
            DatasetKind::Moons { noise } => check_noise(noise)?,
            DatasetKind::Spiral {
                radius,
                turns,
                noise,
            } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(bad("radius", format!("must be finite and > 0, got {radius}")));
                }
                if !(turns.is_finite() && turns > 0.0) {
                    return Err(bad("turns", format!("must be finite and > 0, got {turns}")));
                }
                check_noise(noise)?;
            }
            DatasetKind::Circles { factor, noise } => {
                if !(factor.is_finite() && factor > 0.0 && factor < 1.0) {
                    return Err(bad("factor", format!("must lie in (0, 1), got {factor}")));
                }
                check_noise(noise)?;
            }
        }
        Ok(())
    }
}

fn check_noise(noise: f64) -> Result<()> {
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::InvalidGenParam {
            field: "noise",
            msg: format!("must be finite and >= 0, got {noise}"),
        });
    }
    Ok(())
}

/// A fully specified generation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    #[serde(flatten)]
    pub kind: DatasetKind,
    #[serde(default = "default_n")]
    pub n: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(kind: DatasetKind, n: usize, seed: u64) -> Self {
        GenSpec { kind, n, seed }
    }
}

/// Splits `n` items into `parts` nearly equal block sizes, larger blocks
/// first.
fn split_counts(n: usize, parts: usize) -> Vec<usize> {
    let base = n / parts;
    let rem = n % parts;
    (0..parts)
        .map(|j| if j < rem { base + 1 } else { base })
        .collect()
}

fn gauss(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd == 0.0 {
        0.0
    } else {
        Normal::new(0.0, sd).expect("validated spread").sample(rng)
    }
}

/// Generates the dataset described by `spec`. Output is two-dimensional,
/// carries ground-truth structure labels, and is deterministic in `spec`.
pub fn generate(spec: &GenSpec) -> Result<Dataset> {
    spec.kind.validate()?;
    if spec.n == 0 {
        return Err(Error::InvalidGenParam {
            field: "n",
            msg: "must be at least 1".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let mut pts: Vec<f64> = Vec::with_capacity(2 * n);
    let mut labels: Vec<usize> = Vec::with_capacity(n);

    match spec.kind {
        DatasetKind::Blobs { centers, spread } => {
            let counts = split_counts(n, centers);
            for (j, &cnt) in counts.iter().enumerate() {
                let theta = 2.0 * PI * j as f64 / centers as f64;
                let (cx, cy) = (4.0 * theta.cos(), 4.0 * theta.sin());
                for _ in 0..cnt {
                    pts.push(cx + gauss(&mut rng, spread));
                    pts.push(cy + gauss(&mut rng, spread));
                    labels.push(j);
                }
            }
        }
        DatasetKind::Moons { noise } => {
            let counts = split_counts(n, 2);
            for (arm, &cnt) in counts.iter().enumerate() {
                for m in 0..cnt {
                    let t = if cnt > 1 {
                        PI * m as f64 / (cnt - 1) as f64
                    } else {
                        0.0
                    };
                    let (bx, by) = if arm == 0 {
                        (t.cos(), t.sin())
                    } else {
                        (1.0 - t.cos(), 0.5 - t.sin())
                    };
                    pts.push(bx + gauss(&mut rng, noise));
                    pts.push(by + gauss(&mut rng, noise));
                    labels.push(arm);
                }
            }
        }
        DatasetKind::Spiral {
            radius,
            turns,
            noise,
        } => {
            let counts = split_counts(n, 3);
            for (arm, &cnt) in counts.iter().enumerate() {
                let phase = 2.0 * PI * arm as f64 / 3.0;
                for m in 0..cnt {
                    let t = if cnt > 1 {
                        m as f64 / (cnt - 1) as f64
                    } else {
                        0.0
                    };
                    let r = radius * t;
                    let theta = turns * 2.0 * PI * t + phase;
                    pts.push(r * theta.cos() + gauss(&mut rng, noise));
                    pts.push(r * theta.sin() + gauss(&mut rng, noise));
                    labels.push(arm);
                }
            }
        }
        DatasetKind::Circles { factor, noise } => {
            let counts = split_counts(n, 2);
            for (ring, &cnt) in counts.iter().enumerate() {
                let r = if ring == 0 { 1.0 } else { factor };
                for m in 0..cnt {
                    let theta = 2.0 * PI * m as f64 / cnt as f64;
                    pts.push(r * theta.cos() + gauss(&mut rng, noise));
                    pts.push(r * theta.sin() + gauss(&mut rng, noise));
                    labels.push(ring);
                }
            }
        }
    }

    Dataset::new(n, 2, pts)?.with_labels(labels)
}

/// Writes one point per line, comma-separated, with a `x0,x1,...` header.
/// Values use shortest round-trip decimal form, so a reload reproduces the
/// exact bits. Labels are not part of the format.
pub fn save_csv<P: AsRef<Path>>(x: &Dataset, path: P) -> Result<()> {
    let mut out = String::new();
    let header: Vec<String> = (0..x.dim()).map(|c| format!("x{c}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..x.len() {
        let mut first = true;
        for v in x.point(i) {
            if !first {
                out.push(',');
            }
            write!(out, "{v}").expect("string write");
            first = false;
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a numeric CSV, one point per row. A single leading header row is
/// detected (any non-numeric token) and skipped. Malformed rows are
/// reported with their 1-based line number.
pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let pathstr = path.display().to_string();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut d: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            tokens.iter().map(|t| t.parse::<f64>()).collect();
        match parsed {
            Ok(vals) => {
                if vals.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Csv {
                        path: pathstr,
                        line: lineno,
                        msg: "non-finite value".into(),
                    });
                }
                match d {
                    None => d = Some(vals.len()),
                    Some(want) if want != vals.len() => {
                        return Err(Error::Csv {
                            path: pathstr,
                            line: lineno,
                            msg: format!("expected {want} columns, found {}", vals.len()),
                        });
                    }
                    _ => {}
                }
                rows.push(vals);
            }
            Err(e) => {
                if rows.is_empty() && lineno == first_content_line(&text) {
                    // Header row: skip it.
                    continue;
                }
                return Err(Error::Csv {
                    path: pathstr,
                    line: lineno,
                    msg: format!("non-numeric token: {e}"),
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset(pathstr));
    }
    Dataset::from_rows(&rows)
}

fn first_content_line(text: &str) -> usize {
    for (idx, line) in text.lines().enumerate() {
        if !line.trim().is_empty() {
            return idx + 1;
        }
    }
    0
}
