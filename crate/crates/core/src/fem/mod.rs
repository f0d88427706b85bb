//! Piecewise-linear finite elements on labelled triangulations.

mod assembly;
mod dirichlet;
mod field;
mod flux;
mod norms;
pub mod quadrature;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, RegionId};
use crate::linalg::SolverError;
use crate::mesh::MeshError;

pub use assembly::{
    assemble_load, assemble_load_where, assemble_stiffness, element_gradients, element_stiffness, lumped_mass,
};
pub use dirichlet::{apply_dirichlet, solve_poisson, BoundaryRule, DirichletReduction, DirichletSpec, MarkerSelector, ReducedSystem};
pub use field::{fmt_sig, FeField};
pub use flux::{boundary_flux_functional, consistent_flux, FluxData};
pub use norms::{
    h1_error_exact, h1_norm, h1_seminorm, l2_norm, norm_of, relative_error, ExactError, NormKind,
};

#[derive(Debug, Error)]
pub enum FemError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("triangle {triangle} is degenerate (area {area:e})")]
    Degenerate { triangle: usize, area: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("problem has no Dirichlet vertex; use the mean-zero solver")]
    NoDirichlet,
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("field length {len} does not match {expected} mesh vertices")]
    LengthMismatch { len: usize, expected: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("boundary marker {0} is not present in the mesh")]
    MissingMarker(String),
}

pub type Result<T> = std::result::Result<T, FemError>;

/// Piecewise-constant conductivity: one value on the background, one on every inclusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub background: f64,
    pub inclusion: f64,
}

impl Coefficient {
    /// `kappa = 1` on the background and `eta` in the inclusions.
    pub fn contrast(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(FemError::Config(format!("contrast must be positive and finite, got {eta}")));
        }
        Ok(Coefficient { background: 1.0, inclusion: eta })
    }

    pub fn uniform(kappa: f64) -> Self {
        Coefficient { background: kappa, inclusion: kappa }
    }

    /// Background-only coefficient (zero in inclusions).
    pub fn background_only() -> Self {
        Coefficient { background: 1.0, inclusion: 0.0 }
    }

    /// Inclusion-only coefficient (zero on the background).
    pub fn inclusions_only() -> Self {
        Coefficient { background: 0.0, inclusion: 1.0 }
    }

    pub fn value(&self, region: RegionId) -> f64 {
        if region.is_background() {
            self.background
        } else {
            self.inclusion
        }
    }
}

/// A scalar function of position: source terms and boundary data.
///
/// Polynomials are lists of `[coefficient, px, py]` monomials
/// `coefficient * x^px * y^py` with non-negative integer exponents.
#[derive(Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PointFunction {
    Constant(f64),
    Polynomial(Vec<[f64; 3]>),
    #[serde(skip)]
    Custom(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for PointFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointFunction::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            PointFunction::Polynomial(t) => f.debug_tuple("Polynomial").field(t).finish(),
            PointFunction::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl PartialEq for PointFunction {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (PointFunction::Constant(a), PointFunction::Constant(b)) => a == b,
            (PointFunction::Polynomial(a), PointFunction::Polynomial(b)) => a == b,
            (PointFunction::Custom(a), PointFunction::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl PointFunction {
    pub fn zero() -> Self {
        PointFunction::Constant(0.0)
    }

    pub fn custom(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        PointFunction::Custom(Arc::new(f))
    }

    /// `x + y^2`, the boundary data of the reference experiments.
    pub fn x_plus_y_squared() -> Self {
        PointFunction::Polynomial(vec![[1.0, 1.0, 0.0], [1.0, 0.0, 2.0]])
    }

    pub fn check(&self) -> Result<()> {
        match self {
            PointFunction::Constant(c) if !c.is_finite() => {
                Err(FemError::Config(format!("constant {c} is not finite")))
            }
            PointFunction::Polynomial(terms) => {
                for [c, px, py] in terms {
                    if !c.is_finite() {
                        return Err(FemError::Config(format!("polynomial coefficient {c} is not finite")));
                    }
                    for e in [px, py] {
                        if !(*e >= 0.0 && e.fract() == 0.0 && *e <= 64.0) {
                            return Err(FemError::Config(format!(
                                "polynomial exponent {e} is not a small non-negative integer"
                            )));
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PointFunction::Constant(c) => *c == 0.0,
            PointFunction::Polynomial(t) => t.iter().all(|m| m[0] == 0.0),
            PointFunction::Custom(_) => false,
        }
    }

    pub fn eval(&self, p: Point) -> f64 {
        match self {
            PointFunction::Constant(c) => *c,
            PointFunction::Polynomial(terms) => terms
                .iter()
                .map(|[c, px, py]| c * p.x.powi(*px as i32) * p.y.powi(*py as i32))
                .sum(),
            PointFunction::Custom(f) => f(p),
        }
    }

    /// Gradient, available for constants and polynomials.
    pub fn gradient(&self, p: Point) -> Option<[f64; 2]> {
        match self {
            PointFunction::Constant(_) => Some([0.0, 0.0]),
            PointFunction::Polynomial(terms) => {
                let mut g = [0.0, 0.0];
                for [c, px, py] in terms {
                    let (ex, ey) = (*px as i32, *py as i32);
                    if ex > 0 {
                        g[0] += c * px * p.x.powi(ex - 1) * p.y.powi(ey);
                    }
                    if ey > 0 {
                        g[1] += c * py * p.x.powi(ex) * p.y.powi(ey - 1);
                    }
                }
                Some(g)
            }
            PointFunction::Custom(_) => None,
        }
    }
}

impl From<f64> for PointFunction {
    fn from(c: f64) -> Self {
        PointFunction::Constant(c)
    }
}
