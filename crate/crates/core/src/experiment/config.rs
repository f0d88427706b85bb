use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::layout::{LayoutPattern, LayoutSpec};
use super::{ExperimentError, Result};
use crate::fem::{NormKind, PointFunction};
use crate::geometry::Geometry;
use crate::localization::Coupling;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Fine,
    Expand,
    Localize,
    SweepEta,
    SweepDelta,
    Compare,
}

/// Layout parameters inside a config; the seed comes from the config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutParams {
    pub n: usize,
    pub radius: f64,
    pub pattern: LayoutPattern,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySource {
    /// Geometry JSON, relative paths resolved against the config file.
    File(PathBuf),
    Inline(Geometry),
    Layout(LayoutParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    #[serde(default = "default_f")]
    pub f: PointFunction,
    #[serde(default = "PointFunction::x_plus_y_squared")]
    pub g: PointFunction,
}

fn default_f() -> PointFunction {
    PointFunction::Constant(1.0)
}

impl Default for Problem {
    fn default() -> Self {
        Problem { f: default_f(), g: PointFunction::x_plus_y_squared() }
    }
}

/// One experiment. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub geometry: GeometrySource,
    pub h: f64,
    #[serde(default)]
    pub problem: Problem,
    pub mode: Mode,
    /// Contrast values: the sweep list, or the single value for `fine` and `compare`.
    #[serde(default)]
    pub eta: Vec<f64>,
    #[serde(default)]
    pub delta: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_terms")]
    pub max_terms: usize,
    /// Highest term index `J` for `expand` and `compare`.
    #[serde(default = "default_terms")]
    pub terms: usize,
    #[serde(default)]
    pub coupling: Coupling,
    #[serde(default)]
    pub norm: NormKind,
    #[serde(default)]
    pub source_every_step: bool,
    #[serde(default = "default_cg_tol")]
    pub cg_tol: f64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_tol() -> f64 {
    1e-8
}
fn default_max_terms() -> usize {
    60
}
fn default_terms() -> usize {
    2
}
fn default_cg_tol() -> f64 {
    1e-10
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// A config with defaults for everything but the essentials.
    pub fn new(geometry: GeometrySource, h: f64, mode: Mode) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            geometry,
            h,
            problem: Problem::default(),
            mode,
            eta: Vec::new(),
            delta: Vec::new(),
            tol: default_tol(),
            max_terms: default_max_terms(),
            terms: default_terms(),
            coupling: Coupling::default(),
            norm: NormKind::default(),
            source_every_step: false,
            cg_tol: default_cg_tol(),
            output: default_output(),
            seed: 0,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        Ok(cfg)
    }

    /// Reads a config and resolves a relative geometry path against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_json_str(&std::fs::read_to_string(path)?)?;
        if let GeometrySource::File(p) = &mut cfg.geometry {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// SHA-256 of the compact serialization.
    pub fn hash(&self) -> String {
        hex_digest(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    /// Hash of the inputs that determine the discrete problem (geometry, mesh, data, solver).
    pub fn problem_hash(&self) -> String {
        let key = serde_json::json!({
            "geometry": self.geometry,
            "h": self.h,
            "problem": self.problem,
            "seed": self.seed,
            "cg_tol": self.cg_tol,
        });
        hex_digest(key.to_string().as_bytes())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if !(self.tol > 0.0) || !(self.cg_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.max_terms == 0 {
            return bad("max_terms must be at least 1".into());
        }
        if let Some(e) = self.eta.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return bad(format!("contrast values must be positive, got {e}"));
        }
        if let Some(d) = self.delta.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return bad(format!("delta values must be positive, got {d}"));
        }
        if let GeometrySource::File(p) = &self.geometry {
            if !p.exists() {
                return bad(format!("geometry file {} does not exist", p.display()));
            }
        }
        self.problem.f.check()?;
        self.problem.g.check()?;
        match self.mode {
            Mode::SweepEta => {
                if self.eta.is_empty() {
                    return bad("sweep-eta needs a non-empty eta list".into());
                }
                if self.eta.windows(2).any(|w| w[0] > w[1]) {
                    return bad("eta list must be sorted ascending".into());
                }
            }
            Mode::SweepDelta | Mode::Localize if self.delta.is_empty() => {
                return bad("a non-empty delta list is required".into());
            }
            Mode::Fine | Mode::Compare if self.eta.len() != 1 => {
                return bad("exactly one eta value is required".into());
            }
            _ => {}
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<Geometry> {
        match &self.geometry {
            GeometrySource::File(p) => Ok(Geometry::load(p)?),
            GeometrySource::Inline(g) => Ok(g.clone()),
            GeometrySource::Layout(l) => {
                super::generate_layout(&LayoutSpec { n: l.n, radius: l.radius, pattern: l.pattern, seed: self.seed })
            }
        }
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
