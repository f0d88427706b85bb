//! Deterministic inclusion layouts in the unit disk.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ExperimentError, Result};
use crate::geometry::{Geometry, Point, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutPattern {
    /// A center disk plus concentric rings, each randomly rotated.
    Rings,
    /// Randomly chosen cells of a square grid, each center jittered.
    JitteredGrid,
}

impl std::str::FromStr for LayoutPattern {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rings" => Ok(LayoutPattern::Rings),
            "jittered-grid" => Ok(LayoutPattern::JitteredGrid),
            _ => Err(ExperimentError::Config(format!("unknown layout pattern '{s}' (rings, jittered-grid)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSpec {
    pub n: usize,
    pub radius: f64,
    pub pattern: LayoutPattern,
    #[serde(default)]
    pub seed: u64,
}

/// Circles of radius `radius` in the unit disk with pairwise gaps and
/// boundary clearance of at least `radius / 2`.
pub fn generate_layout(spec: &LayoutSpec) -> Result<Geometry> {
    let r = spec.radius;
    if !(r > 0.0 && r < 0.5) {
        return Err(ExperimentError::Config(format!("inclusion radius must lie in (0, 0.5), got {r}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = match spec.pattern {
        LayoutPattern::Rings => rings(spec.n, &mut rng),
        LayoutPattern::JitteredGrid => jittered_grid(spec.n, r, &mut rng)?,
    };
    let geom = Geometry::new(
        Shape::circle(Point::new(0.0, 0.0), 1.0),
        centers.into_iter().map(|c| Shape::circle(c, r)).collect(),
    );
    let report = geom.validate();
    if report.min_separation < r / 2.0 || report.min_clearance < r / 2.0 {
        return Err(ExperimentError::Infeasible(format!(
            "{} inclusions of radius {r}: separation {:.4}, clearance {:.4}, need {:.4}",
            spec.n,
            report.min_separation,
            report.min_clearance,
            r / 2.0
        )));
    }
    Ok(geom)
}

/// Ring `k` holds `6k` inclusions except the last, which takes the remainder.
fn ring_counts(n: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let mut counts = vec![1];
    let mut left = n - 1;
    let mut k = 1;
    while left > 0 {
        let c = (6 * k).min(left);
        counts.push(c);
        left -= c;
        k += 1;
    }
    counts
}

fn rings(n: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let counts = ring_counts(n);
    let spacing = 1.0 / counts.len() as f64;
    let mut out = Vec::with_capacity(n);
    for (k, &count) in counts.iter().enumerate() {
        if k == 0 {
            out.push(Point::new(0.0, 0.0));
            continue;
        }
        let rho = k as f64 * spacing;
        let phase = rng.random::<f64>() * 2.0 * PI;
        for i in 0..count {
            let t = phase + 2.0 * PI * i as f64 / count as f64;
            out.push(Point::new(rho * t.cos(), rho * t.sin()));
        }
    }
    out
}

fn jittered_grid(n: usize, r: f64, rng: &mut ChaCha8Rng) -> Result<Vec<Point>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let min_pitch = 2.5 * r * (1.0 + 1e-9);
    let reach = 1.0 - 1.5 * r;
    let mut pitch = (PI * reach * reach / n as f64).sqrt();
    while pitch >= min_pitch {
        let half = (reach / pitch).floor() as i64 + 1;
        let mut cells: Vec<Point> = Vec::new();
        for i in -half..=half {
            for j in -half..=half {
                let p = Point::new(i as f64 * pitch, j as f64 * pitch);
                if p.norm() <= reach {
                    cells.push(p);
                }
            }
        }
        if cells.len() >= n {
            cells.shuffle(rng);
            cells.truncate(n);
            let slack = (pitch - min_pitch) / 2.0;
            return Ok(cells
                .into_iter()
                .map(|c| {
                    for _ in 0..64 {
                        let a = rng.random::<f64>() * 2.0 * PI;
                        let d = rng.random::<f64>() * slack;
                        let q = Point::new(c.x + d * a.cos(), c.y + d * a.sin());
                        if q.norm() <= reach {
                            return q;
                        }
                    }
                    c
                })
                .collect());
        }
        pitch *= 0.95;
    }
    Err(ExperimentError::Infeasible(format!("cannot fit {n} inclusions of radius {r} on a grid")))
}
