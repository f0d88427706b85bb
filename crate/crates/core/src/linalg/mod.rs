//! Sparse symmetric linear algebra.

mod cg;
mod csr;
mod dense;
mod neumann;
mod spd;

pub use cg::{cg_solve, CgOptions, CgSolution, Preconditioner};
pub use csr::CsrMatrix;
pub use dense::DenseSpd;
pub use neumann::{solve_mean_zero, MeanZeroSolution, COMPATIBILITY_WARN_THRESHOLD};
pub use spd::{spd_check, SpdReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("CG did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64, history: Vec<f64> },
    #[error("matrix is not positive definite (iteration {iteration}: {detail})")]
    NotSpd { iteration: usize, detail: String },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("dimension mismatch: {rows}x{cols} matrix with right-hand side of length {rhs}")]
    DimensionMismatch { rows: usize, cols: usize, rhs: usize },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

/// Dot product accumulated in index order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += alpha * x;
    }
}
