//! Expansion of the high-contrast solution in powers of `1/eta`.
//!
//! With `K = K0 + eta KI` split into background and inclusion stiffness,
//! `u = sum_j eta^-j u_j` solves the discrete problem term by term:
//! `KI u_0 = 0` and `KI u_j = F [j = 1] - K0 u_{j-1}` (plus the load on the
//! background rows), with `u_0 = g` and `u_j = 0` on the outer boundary.
//! Each term is an inclusion-wise Neumann solve, a harmonic extension into
//! the background and a correction by the harmonic characteristic functions.

mod operators;
mod terms;

use thiserror::Error;

use crate::fem::FemError;
use crate::linalg::SolverError;
use crate::mesh::MeshError;

pub use operators::{
    assemble_b, boundary_corrector, compute_u0, fine_solution, harmonic_characteristics, CharacteristicBasis,
    GeomSystem, LeadingTerm, Operators,
};
pub use terms::{DecayDiagnostics, Expansion, ExpansionOptions};

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("coupling matrix is not positive definite: {0}")]
    DegenerateGeometry(String),
    #[error("inclusion {0} has no mesh vertices")]
    EmptyInclusion(usize),
    #[error(
        "expansion did not reach tolerance {tol:e} within {max_terms} terms at eta = {eta} \
         (term decay ratio {ratio:.4})"
    )]
    NotConverged { eta: f64, tol: f64, max_terms: usize, ratio: f64 },
    #[error("term {requested} requested but only {available} computed")]
    MissingTerm { requested: usize, available: usize },
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ExpansionError>;
