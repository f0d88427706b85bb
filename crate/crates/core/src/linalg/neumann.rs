use super::{cg_solve, dot, norm2, CgOptions, CsrMatrix, SolverError};

/// Relative compatibility defect above which a warning is logged.
pub const COMPATIBILITY_WARN_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MeanZeroSolution {
    pub x: Vec<f64>,
    /// Euclidean norm of the constant-mode component removed from `b`.
    pub defect: f64,
    /// `defect / ||b||` (0 when `b = 0`).
    pub relative_defect: f64,
    pub iterations: usize,
}

/// Solves the singular system `A x = P b` subject to `w^T x = 0`, where the
/// null space of `A` is spanned by the constant vector and `P` removes the
/// constant component of `b`.
pub fn solve_mean_zero(
    a: &CsrMatrix,
    b: &[f64],
    w: &[f64],
    opts: &CgOptions,
) -> Result<MeanZeroSolution, SolverError> {
    let n = a.nrows();
    if b.len() != n || w.len() != n || a.ncols() != n {
        return Err(SolverError::DimensionMismatch { rows: n, cols: a.ncols(), rhs: b.len() });
    }
    if w.iter().any(|&v| !(v > 0.0)) {
        return Err(SolverError::NonFinite("mean-zero weights must be positive".into()));
    }
    let mean = b.iter().sum::<f64>() / n as f64;
    let defect = mean.abs() * (n as f64).sqrt();
    let bnorm = norm2(b);
    let relative_defect = if bnorm > 0.0 { defect / bnorm } else { 0.0 };
    if relative_defect > COMPATIBILITY_WARN_THRESHOLD {
        log::warn!("Neumann data incompatible: removed defect {defect:.3e} (relative {relative_defect:.3e})");
    }
    let pb: Vec<f64> = b.iter().map(|v| v - mean).collect();
    let sol = cg_solve(a, &pb, opts)?;
    let mut x = sol.x;
    let shift = dot(w, &x) / w.iter().sum::<f64>();
    for v in x.iter_mut() {
        *v -= shift;
    }
    Ok(MeanZeroSolution { x, defect, relative_defect, iterations: sol.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path_laplacian(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.extend([(i, i, 1.0), (i + 1, i + 1, 1.0), (i, i + 1, -1.0), (i + 1, i, -1.0)]);
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn zero_rhs() {
        let s = solve_mean_zero(&path_laplacian(3), &[0.0; 3], &[1.0; 3], &CgOptions::default()).unwrap();
        assert_eq!(s.x, vec![0.0; 3]);
        assert_eq!(s.defect, 0.0);
    }

    #[test]
    fn path_of_three() {
        let s = solve_mean_zero(&path_laplacian(3), &[1.0, 0.0, -1.0], &[1.0; 3], &CgOptions::default()).unwrap();
        // pseudoinverse oracle: L^+ (1, 0, -1) = (1, 0, -1)
        for (x, e) in s.x.iter().zip([1.0, 0.0, -1.0]) {
            assert!((x - e).abs() < 1e-10, "{:?}", s.x);
        }
        assert!(s.defect < 1e-15);
    }

    #[test]
    fn constant_rhs_is_pure_defect() {
        let b = [2.0; 4];
        let s = solve_mean_zero(&path_laplacian(4), &b, &[1.0; 4], &CgOptions::default()).unwrap();
        assert!(s.x.iter().all(|v| v.abs() < 1e-14));
        assert!((s.defect - norm2(&b)).abs() < 1e-14);
        assert!((s.relative_defect - 1.0).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn weighted_constraint_holds(
            b in proptest::collection::vec(-10.0f64..10.0, 12),
            w in proptest::collection::vec(0.1f64..3.0, 12),
        ) {
            let a = path_laplacian(12);
            let s = solve_mean_zero(&a, &b, &w, &CgOptions::default().with_tol(1e-12)).unwrap();
            prop_assert!(dot(&w, &s.x).abs() <= 1e-10 * norm2(&s.x).max(1e-300) * norm2(&w) + 1e-300);
            let mean = b.iter().sum::<f64>() / 12.0;
            let ax = a.mul_vec(&s.x);
            let scale = 1e-8 * (1.0 + norm2(&b));
            for (ax, bi) in ax.iter().zip(&b) {
                prop_assert!((ax - (bi - mean)).abs() < scale);
            }
        }
    }
}
