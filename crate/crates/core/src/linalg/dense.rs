use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::SolverError;

/// Cached Cholesky factorization of a small dense SPD matrix.
#[derive(Debug, Clone)]
pub struct DenseSpd {
    matrix: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
}

impl DenseSpd {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self, SolverError> {
        if !matrix.is_square() {
            return Err(SolverError::DimensionMismatch { rows: matrix.nrows(), cols: matrix.ncols(), rhs: 0 });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite("dense matrix entry".into()));
        }
        let factor = Cholesky::new(matrix.clone()).ok_or_else(|| SolverError::NotSpd {
            iteration: 0,
            detail: "Cholesky factorization failed".into(),
        })?;
        Ok(DenseSpd { matrix, factor })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SolverError> {
        if b.len() != self.dim() {
            return Err(SolverError::DimensionMismatch { rows: self.dim(), cols: self.dim(), rhs: b.len() });
        }
        let x = self.factor.solve(&DVector::from_column_slice(b));
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite("dense solve".into()));
        }
        Ok(x.as_slice().to_vec())
    }

    /// Smallest eigenvalue from a full symmetric eigendecomposition.
    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix.clone().symmetric_eigenvalues().min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_rejects_indefinite() {
        let a = DenseSpd::new(DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0])).unwrap();
        let x = a.solve(&[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-14);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14);
        assert!(DenseSpd::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
    }
}
