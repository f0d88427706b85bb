use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::{compute_u0, ExpansionError, LeadingTerm, Operators, Result};
use crate::fem::{fmt_sig, norm_of, FeField, NormKind, PointFunction};
use crate::linalg::{dot, solve_mean_zero, CgOptions, COMPATIBILITY_WARN_THRESHOLD};
use crate::mesh::Mesh;
use crate::vtk::VtkWriter;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionOptions {
    pub cg: CgOptions,
    /// Add the inclusion load to every Neumann solve, not only the first.
    pub source_every_step: bool,
    /// Largest term index tried by [`Expansion::terms_needed`].
    pub max_terms: usize,
    pub norm: NormKind,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions { cg: CgOptions::default(), source_every_step: false, max_terms: 60, norm: NormKind::H1 }
    }
}

/// Least-squares fit of `log ||eta^-j u_j||` against `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayDiagnostics {
    pub eta: f64,
    /// `||eta^-j u_j||` for `j = 0..`.
    pub scaled_norms: Vec<f64>,
    /// Fitted geometric ratio (an estimate of `C / eta`).
    pub rho: f64,
    pub r_squared: f64,
    /// All correction terms vanish; the leading term is exact.
    pub exact: bool,
}

/// The terms `u_0, u_1, ...` of the expansion. Terms do not depend on the
/// contrast, which only enters through [`Expansion::partial_sum`].
#[derive(Debug, Clone)]
pub struct Expansion {
    ops: Arc<Operators>,
    opts: ExpansionOptions,
    leading: LeadingTerm,
    terms: Vec<FeField>,
    constants: Vec<Vec<f64>>,
    term_norms: Vec<f64>,
    defects: Vec<f64>,
}

impl Expansion {
    pub fn new(ops: Arc<Operators>, g: &PointFunction, opts: ExpansionOptions) -> Result<Self> {
        let leading = compute_u0(&ops, g)?;
        let u0 = leading.u0.clone();
        let norm = norm_of(u0.mesh(), u0.values(), opts.norm);
        Ok(Expansion {
            constants: vec![leading.c.clone()],
            terms: vec![u0],
            term_norms: vec![norm],
            defects: vec![0.0],
            ops,
            opts,
            leading,
        })
    }

    /// Convenience constructor from a mesh and problem data.
    pub fn from_problem(
        mesh: Arc<Mesh>,
        f: &PointFunction,
        g: &PointFunction,
        opts: ExpansionOptions,
    ) -> Result<Self> {
        let ops = Arc::new(Operators::new(mesh, f.clone(), opts.cg)?);
        Self::new(ops, g, opts)
    }

    pub fn operators(&self) -> &Arc<Operators> {
        &self.ops
    }

    pub fn options(&self) -> &ExpansionOptions {
        &self.opts
    }

    pub fn leading(&self) -> &LeadingTerm {
        &self.leading
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[FeField] {
        &self.terms
    }

    pub fn term(&self, j: usize) -> Result<&FeField> {
        self.terms.get(j).ok_or(ExpansionError::MissingTerm { requested: j, available: self.terms.len() })
    }

    /// `c_0` (the leading-term constants) followed by `c_j` for each correction.
    pub fn constants(&self) -> &[Vec<f64>] {
        &self.constants
    }

    pub fn term_norms(&self) -> &[f64] {
        &self.term_norms
    }

    /// Largest relative compatibility defect removed from the Neumann data of each term.
    pub fn compatibility_defects(&self) -> &[f64] {
        &self.defects
    }

    /// Computes the next term `u_j` from `u_{j-1}`.
    pub fn next_term(&mut self) -> Result<&FeField> {
        let j = self.terms.len();
        let ops = &*self.ops;
        let mesh = ops.mesh();
        let n = mesh.num_vertices();
        let prev = self.terms[j - 1].values();
        let with_source = j == 1 || self.opts.source_every_step;

        // consistent flux of the previous term through the inclusion boundaries
        let mut lambda = ops.k0().mul_vec(prev);
        if with_source {
            for (l, f) in lambda.iter_mut().zip(ops.load_background()) {
                *l -= f;
            }
        }

        let cg = self.opts.cg;
        let locals: Vec<(Vec<f64>, f64)> = ops
            .blocks
            .par_iter()
            .map(|blk| {
                let rhs: Vec<f64> = blk
                    .vertices
                    .iter()
                    .zip(&blk.on_interface)
                    .map(|(&v, &iface)| {
                        let src = if with_source { ops.load_inclusions()[v] } else { 0.0 };
                        if iface { src - lambda[v] } else { src }
                    })
                    .collect();
                let sol = solve_mean_zero(&blk.matrix, &rhs, &blk.weights, &cg)?;
                Ok((sol.x, sol.relative_defect))
            })
            .collect::<Result<_>>()?;

        let mut lifting = vec![0.0; n];
        let mut defect: f64 = 0.0;
        for (blk, (x, d)) in ops.blocks.iter().zip(&locals) {
            for (&v, &val) in blk.vertices.iter().zip(x) {
                lifting[v] = val;
            }
            defect = defect.max(*d);
        }
        if defect > COMPATIBILITY_WARN_THRESHOLD {
            log::warn!("term {j}: Neumann compatibility defect {defect:.3e}");
        }

        let mut uj = ops.background_solve(None, &lifting)?;
        let c = match &self.leading.geom {
            Some(geom) => {
                let y: Vec<f64> = self.leading.basis.k0_fields.iter().map(|kchi| -dot(&uj, kchi)).collect();
                let c = geom.solve(&y)?;
                for (cm, chi) in c.iter().zip(&self.leading.basis.fields) {
                    for (u, v) in uj.iter_mut().zip(chi.values()) {
                        *u += cm * v;
                    }
                }
                c
            }
            None => Vec::new(),
        };
        let field = FeField::new(mesh.clone(), uj)?;
        self.term_norms.push(norm_of(mesh, field.values(), self.opts.norm));
        self.constants.push(c);
        self.defects.push(defect);
        self.terms.push(field);
        Ok(&self.terms[j])
    }

    /// Makes sure the terms `u_0 .. u_{count-1}` exist.
    pub fn ensure_terms(&mut self, count: usize) -> Result<()> {
        while self.terms.len() < count {
            self.next_term()?;
        }
        Ok(())
    }

    /// `S_J = sum_{j <= J} eta^-j u_j`.
    pub fn partial_sum(&self, eta: f64, j_max: usize) -> Result<FeField> {
        if !(eta > 0.0) {
            return Err(ExpansionError::Invalid(format!("contrast must be positive, got {eta}")));
        }
        if j_max >= self.terms.len() {
            return Err(ExpansionError::MissingTerm { requested: j_max, available: self.terms.len() });
        }
        let coeffs: Vec<f64> = (0..=j_max).map(|j| eta.powi(-(j as i32))).collect();
        let fields: Vec<&FeField> = self.terms[..=j_max].iter().collect();
        Ok(FeField::linear_combination(&coeffs, &fields)?)
    }

    /// Smallest `J >= 1` with `||eta^-J u_J|| < tol ||S_J||`, computing terms as needed.
    pub fn terms_needed(&mut self, eta: f64, tol: f64) -> Result<usize> {
        if !(tol > 0.0) {
            return Err(ExpansionError::Invalid(format!("tolerance must be positive, got {tol}")));
        }
        if !(eta > 0.0) {
            return Err(ExpansionError::Invalid(format!("contrast must be positive, got {eta}")));
        }
        for j in 1..=self.opts.max_terms {
            self.ensure_terms(j + 1)?;
            let term = self.term_norms[j] * eta.powi(-(j as i32));
            if term == 0.0 {
                return Ok(j);
            }
            let s = self.partial_sum(eta, j)?;
            let snorm = norm_of(s.mesh(), s.values(), self.opts.norm);
            if term < tol * snorm {
                return Ok(j);
            }
            if !term.is_finite() {
                break;
            }
        }
        let ratio = self.decay_diagnostics(eta).rho;
        Err(ExpansionError::NotConverged { eta, tol, max_terms: self.opts.max_terms, ratio })
    }

    /// Geometric fit of the scaled term norms over the computed correction terms.
    pub fn decay_diagnostics(&self, eta: f64) -> DecayDiagnostics {
        let scaled: Vec<f64> =
            self.term_norms.iter().enumerate().map(|(j, n)| n * eta.powi(-(j as i32))).collect();
        let pts: Vec<(f64, f64)> = scaled
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &v)| v > 0.0 && v.is_finite())
            .map(|(j, v)| (j as f64, v.ln()))
            .collect();
        let exact = scaled.len() > 1 && scaled[1..].iter().all(|&v| v == 0.0);
        let (rho, r_squared) = if exact {
            (0.0, 1.0)
        } else if pts.len() >= 2 {
            let (slope, r2) = linear_fit(&pts);
            (slope.exp(), r2)
        } else {
            (f64::NAN, f64::NAN)
        };
        DecayDiagnostics { eta, scaled_norms: scaled, rho, r_squared, exact }
    }

    /// CSV manifest `j,norm,c_1,...,c_M`.
    pub fn manifest_csv(&self) -> String {
        let m = self.ops.num_inclusions();
        let mut s = String::from("j,norm");
        for k in 1..=m {
            let _ = write!(s, ",c_{k}");
        }
        s.push('\n');
        for (j, (norm, c)) in self.term_norms.iter().zip(&self.constants).enumerate() {
            let _ = write!(s, "{j},{}", fmt_sig(*norm));
            for v in c {
                let _ = write!(s, ",{}", fmt_sig(*v));
            }
            s.push('\n');
        }
        s
    }

    /// Writes `terms.csv` and one VTK file per term into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let csv = dir.join("terms.csv");
        std::fs::write(&csv, self.manifest_csv())?;
        out.push(csv);
        for (j, t) in self.terms.iter().enumerate() {
            let path = dir.join(format!("term_{j:03}.vtk"));
            VtkWriter::new(t.mesh(), &format!("expansion term u_{j}"))
                .point_field(&format!("u_{j}"), t.values())
                .save(&path)?;
            out.push(path);
        }
        Ok(out)
    }
}

/// Slope and coefficient of determination of the least-squares line.
fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::h1_norm;
    use crate::geometry::{Geometry, Point, RegionId, Shape};
    use crate::mesh::generate_mesh;

    fn setup(f: PointFunction, g: PointFunction) -> Expansion {
        let geom = Geometry::new(
            Shape::circle(Point::new(0.0, 0.0), 1.0),
            vec![
                Shape::circle(Point::new(-0.4, 0.0), 0.15),
                Shape::circle(Point::new(0.35, 0.2), 0.15),
                Shape::circle(Point::new(0.1, -0.5), 0.12),
            ],
        );
        let mesh = Arc::new(generate_mesh(&geom, 0.05).unwrap());
        Expansion::from_problem(mesh, &f, &g, ExpansionOptions::default()).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_terms() {
        let mut e = setup(PointFunction::zero(), PointFunction::zero());
        e.ensure_terms(3).unwrap();
        assert!(e.terms().iter().all(|t| t.max_abs() == 0.0));
        assert!(e.decay_diagnostics(10.0).exact);
    }

    #[test]
    fn first_correction_has_mean_zero_inclusion_part() {
        let mut e = setup(PointFunction::Constant(1.0), PointFunction::zero());
        e.ensure_terms(2).unwrap();
        let u1 = e.term(1).unwrap().values().to_vec();
        let ops = e.operators().clone();
        for (k, blk) in ops.blocks.iter().enumerate() {
            let c = e.constants()[1][k];
            let mean: f64 = blk.vertices.iter().zip(&blk.weights).map(|(&v, w)| w * (u1[v] - c)).sum();
            let area: f64 = blk.weights.iter().sum();
            assert!(mean.abs() <= 1e-10 * area, "{mean}");
            let vals: Vec<f64> = blk.vertices.iter().map(|&v| u1[v]).collect();
            let osc = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vals.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(osc > 1e-6, "u_1 should vary inside inclusion {}", k + 1);
        }
        for &v in ops.outer_vertices() {
            assert_eq!(u1[v], 0.0);
        }
    }

    #[test]
    fn series_converges_to_fine_solution() {
        let f = PointFunction::Constant(1.0);
        let g = PointFunction::x_plus_y_squared();
        let mut e = setup(f.clone(), g.clone());
        e.ensure_terms(6).unwrap();
        let eta = 100.0;
        let fine = super::super::fine_solution(
            e.operators().mesh(),
            eta,
            &f,
            &g,
            &CgOptions::default().with_tol(1e-13).with_max_iter(20_000),
        )
        .unwrap();
        let mut last = f64::INFINITY;
        for j in 0..6 {
            let r = h1_norm(&fine.sub(&e.partial_sum(eta, j).unwrap()).unwrap()) / h1_norm(&fine);
            assert!(r <= last * 1.0001 + 1e-12, "J = {j}: {r} after {last}");
            last = r;
        }
        assert!(last < 1e-7, "{last}");
    }

    #[test]
    fn partial_sums() {
        let mut e = setup(PointFunction::Constant(1.0), PointFunction::x_plus_y_squared());
        e.ensure_terms(3).unwrap();
        assert_eq!(e.partial_sum(7.0, 0).unwrap(), *e.term(0).unwrap());
        let big = e.partial_sum(1e15, 2).unwrap();
        assert!(big.max_abs_diff(e.term(0).unwrap()).unwrap() < 1e-12);
        let s = e.partial_sum(3.0, 2).unwrap();
        let ops = e.operators();
        let g = PointFunction::x_plus_y_squared();
        for &v in ops.outer_vertices() {
            assert_eq!(s.values()[v], g.eval(ops.mesh().vertices()[v]));
        }
        assert!(e.partial_sum(3.0, 5).is_err());
    }

    #[test]
    fn terms_needed_monotone_and_rho_scaling() {
        let mut e = setup(PointFunction::Constant(1.0), PointFunction::x_plus_y_squared());
        let mut prev = usize::MAX;
        for eta in [10.0, 100.0, 1e4, 1e8] {
            let j = e.terms_needed(eta, 1e-8).unwrap();
            assert!(j <= prev, "eta {eta}: {j} > {prev}");
            prev = j;
        }
        assert!(prev <= 2);
        let d1 = e.decay_diagnostics(20.0);
        let d2 = e.decay_diagnostics(40.0);
        assert!((d1.rho / d2.rho - 2.0).abs() < 0.6);
        assert!(d1.r_squared > 0.9, "{d1:?}");
        let _ = RegionId(0);
    }

    #[test]
    fn linear_fit_exact_line() {
        let (s, r2) = linear_fit(&[(1.0, 1.0), (2.0, 3.0), (3.0, 5.0)]);
        assert!((s - 2.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }
}
