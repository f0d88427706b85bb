use super::{cg_solve, dot, norm2, CgOptions, CsrMatrix, Preconditioner, SolverError};

#[derive(Debug, Clone, PartialEq)]
pub struct SpdReport {
    /// `max |A - A^T| / max |A|`.
    pub symmetry_error: f64,
    pub min_diagonal: f64,
    /// Inverse power iteration estimate; `None` if the inner solves failed.
    pub min_eigenvalue: Option<f64>,
}

impl SpdReport {
    pub fn is_spd(&self, sym_tol: f64) -> bool {
        self.symmetry_error <= sym_tol && self.min_diagonal > 0.0 && self.min_eigenvalue.is_some_and(|l| l > 0.0)
    }
}

const MAX_POWER_STEPS: usize = 500;

/// Symmetry, diagonal and smallest-eigenvalue diagnostics for a square matrix.
pub fn spd_check(a: &CsrMatrix) -> SpdReport {
    assert_eq!(a.nrows(), a.ncols(), "spd_check needs a square matrix");
    let n = a.nrows();
    let symmetry_error = a.symmetry_error();
    let min_diagonal = a.diagonal().into_iter().fold(f64::INFINITY, f64::min);
    let min_eigenvalue = if n == 0 { None } else { inverse_power(a).ok() };
    SpdReport { symmetry_error, min_diagonal, min_eigenvalue }
}

fn inverse_power(a: &CsrMatrix) -> Result<f64, SolverError> {
    let n = a.nrows();
    let opts = CgOptions::default()
        .with_tol(1e-13)
        .with_max_iter(20 * n + 100)
        .with_precond(Preconditioner::None);
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * ((i as f64) * 0.731).sin()).collect();
    let s = norm2(&x);
    x.iter_mut().for_each(|v| *v /= s);
    let mut lambda = dot(&x, &a.mul_vec(&x));
    for _ in 0..MAX_POWER_STEPS {
        let y = cg_solve(a, &x, &opts)?.x;
        let ny = norm2(&y);
        if !(ny > 0.0) || !ny.is_finite() {
            return Err(SolverError::NonFinite("inverse power iterate".into()));
        }
        x = y.into_iter().map(|v| v / ny).collect();
        let next = dot(&x, &a.mul_vec(&x));
        let done = (next - lambda).abs() <= 1e-12 * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        let r = spd_check(&CsrMatrix::identity(4));
        assert_eq!(r.symmetry_error, 0.0);
        assert!((r.min_eigenvalue.unwrap() - 1.0).abs() < 1e-12);
        assert!(r.is_spd(1e-12));
    }

    #[test]
    fn diag_one_two() {
        let r = spd_check(&CsrMatrix::from_diagonal(&[1.0, 2.0]));
        assert!((r.min_eigenvalue.unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(r.min_diagonal, 1.0);
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let exact = a.to_dense().symmetric_eigenvalues().min();
        let r = spd_check(&a);
        assert!((r.min_eigenvalue.unwrap() - exact).abs() < 1e-8 * exact.max(1.0), "{r:?} vs {exact}");
    }

    #[test]
    fn indefinite_not_spd() {
        let r = spd_check(&CsrMatrix::from_diagonal(&[1.0, -2.0]));
        assert!(!r.is_spd(1e-12));
    }
}
