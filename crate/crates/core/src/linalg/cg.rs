//! Preconditioned conjugate gradients with minimal-residual smoothing.
//!
//! The smoothed iterate `y_k` is a convex-like combination of the previous
//! smoothed iterate and the plain CG iterate chosen to minimise the residual
//! norm, so the reported residual history never increases. The plain CG
//! recurrences are unchanged.

use super::{dot, norm2, CsrMatrix, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    None,
    #[default]
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `||b - A x|| <= tol ||b||`.
    pub tol: f64,
    /// Iteration cap; `None` means `ceil(20 sqrt(n))`.
    pub max_iter: Option<usize>,
    pub precond: Preconditioner,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { tol: 1e-10, max_iter: None, precond: Preconditioner::Jacobi }
    }
}

impl CgOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = Some(max_iter);
        self
    }

    pub fn with_precond(mut self, precond: Preconditioner) -> Self {
        self.precond = precond;
        self
    }

    pub(crate) fn iteration_cap(&self, n: usize) -> usize {
        self.max_iter.unwrap_or_else(|| ((20.0 * (n as f64).sqrt()).ceil() as usize).max(10))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Achieved relative residual `||b - A x|| / ||b||`.
    pub residual: f64,
    /// Relative residual after each iteration (index 0 is the initial guess).
    pub history: Vec<f64>,
}

/// Solves `A x = b` for symmetric positive definite `A`, starting from zero.
pub fn cg_solve(a: &CsrMatrix, b: &[f64], opts: &CgOptions) -> Result<CgSolution, SolverError> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(SolverError::DimensionMismatch { rows: n, cols: a.ncols(), rhs: b.len() });
    }
    if !(opts.tol > 0.0) {
        return Err(SolverError::InvalidTolerance(opts.tol));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFinite("right-hand side".into()));
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(CgSolution { x: vec![0.0; n], iterations: 0, residual: 0.0, history: vec![0.0] });
    }
    let inv_diag: Vec<f64> = match opts.precond {
        Preconditioner::None => vec![1.0; n],
        Preconditioner::Jacobi => {
            let d = a.diagonal();
            if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
                return Err(SolverError::NotSpd {
                    iteration: 0,
                    detail: format!("non-positive diagonal entry {:e} at row {i}", d[i]),
                });
            }
            d.iter().map(|v| 1.0 / v).collect()
        }
    };
    let cap = opts.iteration_cap(n);

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);

    // smoothed iterate and residual
    let mut y = x.clone();
    let mut s = r.clone();
    let mut snorm = bnorm;
    let mut history = vec![1.0];

    for it in 1..=cap {
        a.mul_vec_into(&p, &mut ap);
        let curv = dot(&p, &ap);
        if !curv.is_finite() {
            return Err(SolverError::NonFinite(format!("curvature at iteration {it}")));
        }
        if curv <= 0.0 {
            return Err(SolverError::NotSpd {
                iteration: it,
                detail: format!("p^T A p = {curv:e}"),
            });
        }
        let alpha = rz / curv;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }

        // minimal residual smoothing: s <- s + t (r - s), y <- y + t (x - y)
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let d = r[i] - s[i];
            num += s[i] * d;
            den += d * d;
        }
        if den > 0.0 {
            let t = -num / den;
            for i in 0..n {
                s[i] += t * (r[i] - s[i]);
                y[i] += t * (x[i] - y[i]);
            }
            snorm = norm2(&s);
        }
        let rel = snorm / bnorm;
        if !rel.is_finite() {
            return Err(SolverError::NonFinite(format!("residual at iteration {it}")));
        }
        history.push(rel);
        if rel <= opts.tol {
            return Ok(CgSolution { x: y, iterations: it, residual: rel, history });
        }

        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::NotConverged {
        iterations: cap,
        residual: *history.last().unwrap_or(&1.0),
        history,
    })
}
