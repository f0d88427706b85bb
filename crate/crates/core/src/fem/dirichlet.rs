use std::sync::Arc;

use super::{assemble_load, assemble_stiffness, Coefficient, FeField, FemError, PointFunction, Result};
use crate::geometry::RegionId;
use crate::linalg::{cg_solve, CgOptions, CgSolution, CsrMatrix};
use crate::mesh::{BoundaryMarker, Mesh};

/// Which boundary markers a rule applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkerSelector {
    Outer,
    Inclusion(RegionId),
    AnyInclusion,
    Artificial,
    Any,
}

impl MarkerSelector {
    pub fn matches(&self, marker: BoundaryMarker) -> bool {
        match (self, marker) {
            (MarkerSelector::Any, _) => true,
            (MarkerSelector::Outer, BoundaryMarker::Outer) => true,
            (MarkerSelector::Artificial, BoundaryMarker::Artificial) => true,
            (MarkerSelector::AnyInclusion, BoundaryMarker::Inclusion(_)) => true,
            (MarkerSelector::Inclusion(a), BoundaryMarker::Inclusion(b)) => *a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryRule {
    Dirichlet(PointFunction),
    Natural,
}

/// Ordered boundary rules. Each marker takes the first rule that selects it;
/// a vertex on several marked edges is constrained by the earliest Dirichlet
/// rule among them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DirichletSpec {
    rules: Vec<(MarkerSelector, BoundaryRule)>,
}

impl DirichletSpec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Dirichlet data `g` on every marked edge.
    pub fn all(g: impl Into<PointFunction>) -> Self {
        Self::new().dirichlet(MarkerSelector::Any, g)
    }

    pub fn dirichlet(mut self, sel: MarkerSelector, g: impl Into<PointFunction>) -> Self {
        self.rules.push((sel, BoundaryRule::Dirichlet(g.into())));
        self
    }

    pub fn natural(mut self, sel: MarkerSelector) -> Self {
        self.rules.push((sel, BoundaryRule::Natural));
        self
    }

    pub fn rules(&self) -> &[(MarkerSelector, BoundaryRule)] {
        &self.rules
    }

    fn rule_for(&self, marker: BoundaryMarker) -> Option<usize> {
        self.rules.iter().position(|(s, _)| s.matches(marker))
    }

    /// Dirichlet value of every constrained vertex (`None` for free vertices).
    pub fn vertex_values(&self, mesh: &Mesh) -> Result<Vec<Option<f64>>> {
        for (_, rule) in &self.rules {
            if let BoundaryRule::Dirichlet(g) = rule {
                g.check()?;
            }
        }
        let markers = mesh.vertex_markers();
        let mut out = vec![None; mesh.num_vertices()];
        for (v, ms) in markers.iter().enumerate() {
            let mut best: Option<usize> = None;
            for &m in ms {
                let r = self
                    .rule_for(m)
                    .ok_or_else(|| FemError::Config(format!("boundary marker {m} has no rule")))?;
                if matches!(self.rules[r].1, BoundaryRule::Dirichlet(_)) && best.is_none_or(|b| r < b) {
                    best = Some(r);
                }
            }
            if let Some(r) = best {
                if let BoundaryRule::Dirichlet(g) = &self.rules[r].1 {
                    let val = g.eval(mesh.vertices()[v]);
                    if !val.is_finite() {
                        return Err(FemError::NonFinite(format!("boundary value at vertex {v}")));
                    }
                    out[v] = Some(val);
                }
            }
        }
        Ok(out)
    }
}

/// Symmetric elimination of constrained vertices, reusable for any data.
#[derive(Debug, Clone)]
pub struct DirichletReduction {
    n: usize,
    free: Vec<usize>,
    fixed: Vec<usize>,
    a_ff: CsrMatrix,
    a_fd: CsrMatrix,
}

impl DirichletReduction {
    pub fn new(a: &CsrMatrix, constrained: &[bool]) -> Self {
        let n = a.nrows();
        assert_eq!(constrained.len(), n);
        let free: Vec<usize> = (0..n).filter(|&i| !constrained[i]).collect();
        let fixed: Vec<usize> = (0..n).filter(|&i| constrained[i]).collect();
        let a_ff = a.submatrix(&free, &free);
        let a_fd = a.submatrix(&free, &fixed);
        DirichletReduction { n, free, fixed, a_ff, a_fd }
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn fixed(&self) -> &[usize] {
        &self.fixed
    }

    pub fn reduced_matrix(&self) -> &CsrMatrix {
        &self.a_ff
    }

    /// `b_f - A_fd g_d` for a full-length load `b` and lifting `g`.
    pub fn reduced_rhs(&self, b: &[f64], lifting: &[f64]) -> Vec<f64> {
        let gd: Vec<f64> = self.fixed.iter().map(|&i| lifting[i]).collect();
        let agd = self.a_fd.mul_vec(&gd);
        self.free.iter().zip(agd).map(|(&i, v)| b[i] - v).collect()
    }

    pub fn reconstruct(&self, x_free: &[f64], lifting: &[f64]) -> Vec<f64> {
        let mut x = lifting.to_vec();
        for (&i, &v) in self.free.iter().zip(x_free) {
            x[i] = v;
        }
        x
    }

    /// Solves with load `b` and Dirichlet values taken from `lifting` at the
    /// constrained vertices.
    pub fn solve(&self, b: &[f64], lifting: &[f64], opts: &CgOptions) -> Result<(Vec<f64>, Option<CgSolution>)> {
        assert_eq!(b.len(), self.n);
        assert_eq!(lifting.len(), self.n);
        if self.free.is_empty() {
            return Ok((lifting.to_vec(), None));
        }
        let rhs = self.reduced_rhs(b, lifting);
        let sol = cg_solve(&self.a_ff, &rhs, opts)?;
        let x = self.reconstruct(&sol.x, lifting);
        Ok((x, Some(sol)))
    }
}

/// A Dirichlet-reduced system together with its boundary lifting.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub reduction: DirichletReduction,
    pub rhs: Vec<f64>,
    pub lifting: FeField,
}

impl ReducedSystem {
    pub fn reconstruct(&self, x_free: &[f64]) -> Result<FeField> {
        FeField::new(self.lifting.mesh().clone(), self.reduction.reconstruct(x_free, self.lifting.values()))
    }
}

pub fn apply_dirichlet(a: &CsrMatrix, b: &[f64], mesh: &Arc<Mesh>, spec: &DirichletSpec) -> Result<ReducedSystem> {
    let values = spec.vertex_values(mesh)?;
    let constrained: Vec<bool> = values.iter().map(Option::is_some).collect();
    let lifting: Vec<f64> = values.iter().map(|v| v.unwrap_or(0.0)).collect();
    let reduction = DirichletReduction::new(a, &constrained);
    let rhs = reduction.reduced_rhs(b, &lifting);
    Ok(ReducedSystem { reduction, rhs, lifting: FeField::new(mesh.clone(), lifting)? })
}

/// Galerkin solution of `-div(kappa grad u) = f` with the given boundary rules.
pub fn solve_poisson(
    mesh: &Arc<Mesh>,
    coeff: &Coefficient,
    f: &PointFunction,
    spec: &DirichletSpec,
    opts: &CgOptions,
) -> Result<FeField> {
    f.check()?;
    let a = assemble_stiffness(mesh, coeff)?;
    let b = assemble_load(mesh, f);
    let sys = apply_dirichlet(&a, &b, mesh, spec)?;
    if sys.reduction.fixed().is_empty() {
        return Err(FemError::NoDirichlet);
    }
    if sys.reduction.free().is_empty() {
        return Ok(sys.lifting);
    }
    let sol = cg_solve(sys.reduction.reduced_matrix(), &sys.rhs, opts)?;
    sys.reconstruct(&sol.x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::h1_error_exact;
    use crate::geometry::{Geometry, Point, Shape};
    use crate::mesh::generate_mesh;

    #[test]
    fn zero_data_gives_zero() {
        let m = Arc::new(generate_mesh(&Geometry::unit_square(), 0.2).unwrap());
        let u = solve_poisson(&m, &Coefficient::uniform(1.0), &PointFunction::zero(), &DirichletSpec::all(0.0), &CgOptions::default())
            .unwrap();
        assert_eq!(u.max_abs(), 0.0);
        let a = assemble_stiffness(&m, &Coefficient::uniform(1.0)).unwrap();
        let sys = apply_dirichlet(&a, &vec![0.0; m.num_vertices()], &m, &DirichletSpec::all(0.0)).unwrap();
        assert_eq!(sys.lifting.max_abs(), 0.0);
        let interior = m.vertex_markers().iter().filter(|v| v.is_empty()).count();
        assert_eq!(sys.reduction.free().len(), interior);
    }

    #[test]
    fn constants_are_harmonic() {
        let m = Arc::new(generate_mesh(&Geometry::unit_square(), 0.1).unwrap());
        let u = solve_poisson(&m, &Coefficient::uniform(1.0), &PointFunction::zero(), &DirichletSpec::all(1.0), &CgOptions::default())
            .unwrap();
        assert!(u.values().iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn missing_rule_is_config_error() {
        let g = Geometry::new(Shape::circle(Point::new(0.0, 0.0), 1.0), vec![Shape::circle(Point::new(0.0, 0.0), 0.3)]);
        let m = Arc::new(generate_mesh(&g, 0.1).unwrap());
        let spec = DirichletSpec::new().dirichlet(MarkerSelector::Outer, 0.0);
        let r = solve_poisson(&m, &Coefficient::uniform(1.0), &PointFunction::zero(), &spec, &CgOptions::default());
        assert!(matches!(r, Err(FemError::Config(_))), "{r:?}");
        let spec = spec.natural(MarkerSelector::AnyInclusion);
        solve_poisson(&m, &Coefficient::uniform(1.0), &PointFunction::zero(), &spec, &CgOptions::default()).unwrap();
    }

    #[test]
    fn tie_break_follows_rule_order() {
        let g = Geometry::new(Shape::circle(Point::new(0.0, 0.0), 1.0), vec![Shape::circle(Point::new(0.0, 0.0), 0.3)]);
        let m = generate_mesh(&g, 0.1).unwrap();
        let spec = DirichletSpec::new()
            .dirichlet(MarkerSelector::Inclusion(RegionId(1)), 1.0)
            .dirichlet(MarkerSelector::Any, 0.0);
        let vals = spec.vertex_values(&m).unwrap();
        for v in m.marked_vertices(BoundaryMarker::Inclusion(RegionId(1))) {
            assert_eq!(vals[v], Some(1.0));
        }
        for v in m.marked_vertices(BoundaryMarker::Outer) {
            assert_eq!(vals[v], Some(0.0));
        }
    }

    #[test]
    fn manufactured_first_order() {
        // u = x + y^2, -laplace u = -2
        let u = PointFunction::x_plus_y_squared();
        let mut errs = Vec::new();
        for h in [0.08, 0.04] {
            let m = Arc::new(generate_mesh(&Geometry::unit_square(), h).unwrap());
            let uh = solve_poisson(&m, &Coefficient::uniform(1.0), &PointFunction::Constant(-2.0), &DirichletSpec::all(u.clone()), &CgOptions::default())
                .unwrap();
            let e = h1_error_exact(&uh, |p| u.eval(p), |p| u.gradient(p).unwrap());
            errs.push(e.h1_error() / e.h1_exact());
        }
        let ratio = errs[0] / errs[1];
        assert!((1.6..=2.4).contains(&ratio), "{errs:?}");
    }
}
