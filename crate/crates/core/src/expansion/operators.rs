use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{ExpansionError, Result};
use crate::fem::{
    assemble_load_where, assemble_stiffness, solve_poisson, Coefficient, DirichletReduction, DirichletSpec, FeField,
    MarkerSelector, PointFunction,
};
use crate::geometry::RegionId;
use crate::linalg::{dot, CgOptions, CsrMatrix, DenseSpd};
use crate::mesh::{BoundaryMarker, Mesh};

/// One inclusion's Neumann block.
#[derive(Debug, Clone)]
pub(crate) struct InclusionBlock {
    /// Parent vertices of the closed inclusion, ascending.
    pub vertices: Vec<usize>,
    /// Whether each local vertex lies on the inclusion boundary.
    pub on_interface: Vec<bool>,
    /// Inclusion stiffness restricted to `vertices`.
    pub matrix: CsrMatrix,
    /// Lumped mass of the inclusion at each local vertex.
    pub weights: Vec<f64>,
}

/// Matrices, loads and reductions shared by every stage of the expansion.
#[derive(Debug, Clone)]
pub struct Operators {
    mesh: Arc<Mesh>,
    f: PointFunction,
    k0: CsrMatrix,
    load: Vec<f64>,
    load_bg: Vec<f64>,
    load_inc: Vec<f64>,
    background: DirichletReduction,
    outer: Vec<usize>,
    pub(crate) blocks: Vec<InclusionBlock>,
    cg: CgOptions,
}

impl Operators {
    pub fn new(mesh: Arc<Mesh>, f: PointFunction, cg: CgOptions) -> Result<Self> {
        f.check()?;
        let k0 = assemble_stiffness(&mesh, &Coefficient::background_only())?;
        let ki = assemble_stiffness(&mesh, &Coefficient::inclusions_only())?;
        let load_bg = assemble_load_where(&mesh, &f, |r| r.is_background());
        let load_inc = assemble_load_where(&mesh, &f, |r| !r.is_background());
        let load: Vec<f64> = load_bg.iter().zip(&load_inc).map(|(a, b)| a + b).collect();

        let n = mesh.num_vertices();
        let markers = mesh.vertex_markers();
        let mut in_background = vec![false; n];
        for v in mesh.region_vertices(RegionId::BACKGROUND) {
            in_background[v] = true;
        }
        let constrained: Vec<bool> = (0..n).map(|v| !in_background[v] || !markers[v].is_empty()).collect();
        let background = DirichletReduction::new(&k0, &constrained);
        let outer = mesh.marked_vertices(BoundaryMarker::Outer);

        let m_count = mesh.num_regions();
        let mut tri_by_region: Vec<Vec<usize>> = vec![Vec::new(); m_count + 1];
        for (t, r) in mesh.tri_region().iter().enumerate() {
            tri_by_region[r.0].push(t);
        }
        let mut blocks = Vec::with_capacity(m_count);
        for m in 1..=m_count {
            let vertices = mesh.region_vertices(RegionId(m));
            if vertices.is_empty() {
                return Err(ExpansionError::EmptyInclusion(m));
            }
            let mut local = vec![usize::MAX; n];
            for (k, &v) in vertices.iter().enumerate() {
                local[v] = k;
            }
            let mut weights = vec![0.0; vertices.len()];
            for &t in &tri_by_region[m] {
                let a = mesh.signed_area(t) / 3.0;
                for v in mesh.triangles()[t] {
                    weights[local[v]] += a;
                }
            }
            let on_interface = vertices.iter().map(|&v| !markers[v].is_empty()).collect();
            let matrix = ki.submatrix(&vertices, &vertices);
            blocks.push(InclusionBlock { vertices, on_interface, matrix, weights });
        }
        Ok(Operators { mesh, f, k0, load, load_bg, load_inc, background, outer, blocks, cg })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn f(&self) -> &PointFunction {
        &self.f
    }

    pub fn num_inclusions(&self) -> usize {
        self.blocks.len()
    }

    /// Background stiffness matrix on the whole mesh (zero on inclusion triangles).
    pub fn k0(&self) -> &CsrMatrix {
        &self.k0
    }

    /// Load vector of `f` over the whole domain.
    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn load_background(&self) -> &[f64] {
        &self.load_bg
    }

    pub fn load_inclusions(&self) -> &[f64] {
        &self.load_inc
    }

    pub fn cg(&self) -> &CgOptions {
        &self.cg
    }

    pub fn outer_vertices(&self) -> &[usize] {
        &self.outer
    }

    /// Vertices of the closed inclusion `m` (1-based), ascending.
    pub fn inclusion_vertices(&self, m: usize) -> &[usize] {
        &self.blocks[m - 1].vertices
    }

    /// Background Laplace solve: the given values are imposed on the outer
    /// boundary and on every closed inclusion, `load` drives the interior.
    pub fn background_solve(&self, load: Option<&[f64]>, lifting: &[f64]) -> Result<Vec<f64>> {
        let zero;
        let b = match load {
            Some(b) => b,
            None => {
                zero = vec![0.0; lifting.len()];
                &zero
            }
        };
        Ok(self.background.solve(b, lifting, &self.cg)?.0)
    }

    fn field(&self, values: Vec<f64>) -> Result<FeField> {
        Ok(FeField::new(self.mesh.clone(), values)?)
    }
}

/// Harmonic characteristic functions `chi_m` and their products `K0 chi_m`.
#[derive(Debug, Clone)]
pub struct CharacteristicBasis {
    pub fields: Vec<FeField>,
    pub k0_fields: Vec<Vec<f64>>,
}

impl CharacteristicBasis {
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// `sum_m c_m chi_m` as raw vertex values.
    pub fn combine(&self, c: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (cm, chi) in c.iter().zip(&self.fields) {
            for (o, v) in out.iter_mut().zip(chi.values()) {
                *o += cm * v;
            }
        }
        out
    }
}

/// Solves for every `chi_m`: harmonic in the background, one on inclusion
/// `m`, zero on the other inclusions and on the outer boundary.
pub fn harmonic_characteristics(ops: &Operators) -> Result<CharacteristicBasis> {
    let n = ops.mesh.num_vertices();
    let fields: Vec<Vec<f64>> = (1..=ops.num_inclusions())
        .into_par_iter()
        .map(|m| {
            let mut lifting = vec![0.0; n];
            for &v in ops.inclusion_vertices(m) {
                lifting[v] = 1.0;
            }
            ops.background_solve(None, &lifting)
        })
        .collect::<Result<_>>()?;
    let k0_fields = fields.par_iter().map(|chi| ops.k0.mul_vec(chi)).collect();
    let fields = fields.into_iter().map(|v| ops.field(v)).collect::<Result<_>>()?;
    Ok(CharacteristicBasis { fields, k0_fields })
}

/// Boundary corrector `u00`: `-laplace u00 = f` in the background,
/// `u00 = g` on the outer boundary and zero on every inclusion.
pub fn boundary_corrector(ops: &Operators, g: &PointFunction) -> Result<FeField> {
    g.check()?;
    let mut lifting = vec![0.0; ops.mesh.num_vertices()];
    for &v in &ops.outer {
        lifting[v] = g.eval(ops.mesh.vertices()[v]);
    }
    let u = ops.background_solve(Some(&ops.load_bg), &lifting)?;
    ops.field(u)
}

/// The symmetric coupling matrix `a_ml = chi_m^T K0 chi_l` and its factorization.
#[derive(Debug, Clone)]
pub struct GeomSystem {
    factor: DenseSpd,
}

impl GeomSystem {
    pub fn assemble(basis: &CharacteristicBasis) -> Result<Self> {
        Self::from_products(&basis.fields.iter().map(|f| f.values()).collect::<Vec<_>>(), &basis.k0_fields)
    }

    /// Builds the Gram matrix of `fields` in the inner product given by the
    /// precomputed products `k_fields[l] = K fields[l]`. Pairs with disjoint
    /// supports are skipped.
    pub fn from_products(fields: &[&[f64]], k_fields: &[Vec<f64>]) -> Result<Self> {
        let m = fields.len();
        let supports: Vec<(usize, usize)> = fields.iter().map(|f| support_range(f)).collect();
        let k_supports: Vec<(usize, usize)> = k_fields.iter().map(|f| support_range(f)).collect();
        let mut a = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let (lo, hi) = (supports[i].0.max(k_supports[j].0), supports[i].1.min(k_supports[j].1));
                if lo >= hi {
                    continue;
                }
                let v = dot(&fields[i][lo..hi], &k_fields[j][lo..hi]);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let factor = DenseSpd::new(a).map_err(|e| ExpansionError::DegenerateGeometry(e.to_string()))?;
        Ok(GeomSystem { factor })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.factor.matrix()
    }

    pub fn dim(&self) -> usize {
        self.factor.dim()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        Ok(self.factor.solve(b)?)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.factor.min_eigenvalue()
    }
}

/// Index range `[lo, hi)` containing every nonzero entry.
fn support_range(v: &[f64]) -> (usize, usize) {
    match v.iter().position(|&x| x != 0.0) {
        None => (0, 0),
        Some(lo) => (lo, v.iter().rposition(|&x| x != 0.0).map_or(lo, |h| h + 1)),
    }
}

/// `b_l = F . chi_l - u00^T K0 chi_l`.
pub fn assemble_b(ops: &Operators, basis: &CharacteristicBasis, u00: &FeField) -> Vec<f64> {
    basis
        .fields
        .iter()
        .zip(&basis.k0_fields)
        .map(|(chi, kchi)| dot(&ops.load, chi.values()) - dot(u00.values(), kchi))
        .collect()
}

/// The leading term `u0 = u00 + sum_m c_m chi_m` with its ingredients.
#[derive(Debug, Clone)]
pub struct LeadingTerm {
    pub u0: FeField,
    pub u00: FeField,
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    pub basis: CharacteristicBasis,
    pub geom: Option<GeomSystem>,
    /// `max_l |chi_l^T (K u0 - F)|`, the Galerkin residual of the coupling solve.
    pub galerkin_residual: f64,
}

impl LeadingTerm {
    /// `u_c = sum_m c_m chi_m`.
    pub fn coupled_part(&self) -> Result<FeField> {
        let n = self.u0.mesh().num_vertices();
        Ok(FeField::new(self.u0.mesh().clone(), self.basis.combine(&self.c, n))?)
    }
}

pub fn compute_u0(ops: &Operators, g: &PointFunction) -> Result<LeadingTerm> {
    let u00 = boundary_corrector(ops, g)?;
    let basis = harmonic_characteristics(ops)?;
    if basis.is_empty() {
        return Ok(LeadingTerm {
            u0: u00.clone(),
            u00,
            c: Vec::new(),
            b: Vec::new(),
            basis,
            geom: None,
            galerkin_residual: 0.0,
        });
    }
    let geom = GeomSystem::assemble(&basis)?;
    let b = assemble_b(ops, &basis, &u00);
    let c = geom.solve(&b)?;
    let mut u0 = basis.combine(&c, ops.mesh.num_vertices());
    for (u, v) in u0.iter_mut().zip(u00.values()) {
        *u += v;
    }
    // chi_l^T (K0 u0 - F), using the symmetry of K0
    let galerkin_residual = basis
        .fields
        .iter()
        .zip(&basis.k0_fields)
        .map(|(chi, kchi)| (dot(&u0, kchi) - dot(&ops.load, chi.values())).abs())
        .fold(0.0, f64::max);
    Ok(LeadingTerm { u0: ops.field(u0)?, u00, c, b, basis, geom: Some(geom), galerkin_residual })
}

/// Direct solve of the full problem with contrast `eta`.
pub fn fine_solution(
    mesh: &Arc<Mesh>,
    eta: f64,
    f: &PointFunction,
    g: &PointFunction,
    cg: &CgOptions,
) -> Result<FeField> {
    let spec = DirichletSpec::new()
        .dirichlet(MarkerSelector::Outer, g.clone())
        .natural(MarkerSelector::Any);
    Ok(solve_poisson(mesh, &Coefficient::contrast(eta)?, f, &spec, cg)?)
}
