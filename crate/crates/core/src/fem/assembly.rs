use rayon::prelude::*;

use super::{Coefficient, FemError, PointFunction, Result};
use crate::geometry::{Point, RegionId};
use crate::linalg::CsrMatrix;
use crate::mesh::Mesh;

/// Triangles per rayon task during assembly.
const ELEMENT_CHUNK: usize = 4096;

/// Gradients of the three barycentric hat functions and the triangle area.
pub fn element_gradients(p: [Point; 3]) -> ([[f64; 2]; 3], f64) {
    let twice = (p[1] - p[0]).cross(p[2] - p[0]);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        // grad phi_i is perpendicular to the opposite edge b - a
        g[i] = [(a.y - b.y) / twice, (b.x - a.x) / twice];
    }
    (g, 0.5 * twice)
}

/// Exact P1 element stiffness matrix for unit conductivity.
pub fn element_stiffness(p: [Point; 3]) -> [[f64; 3]; 3] {
    let (g, area) = element_gradients(p);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    k
}

fn check_areas(mesh: &Mesh) -> Result<()> {
    for t in 0..mesh.num_triangles() {
        let area = mesh.signed_area(t);
        if !(area > 0.0) {
            return Err(FemError::Degenerate { triangle: t, area });
        }
    }
    Ok(())
}

/// Global stiffness matrix `sum_T kappa_T int_T grad phi_i . grad phi_j`.
///
/// Triangles whose coefficient is zero contribute explicit zeros, so matrices
/// assembled with different coefficients share one sparsity pattern.
pub fn assemble_stiffness(mesh: &Mesh, coeff: &Coefficient) -> Result<CsrMatrix> {
    check_areas(mesh)?;
    let tris = mesh.triangles();
    let regions = mesh.tri_region();
    let triplets: Vec<(usize, usize, f64)> = tris
        .par_chunks(ELEMENT_CHUNK)
        .enumerate()
        .flat_map_iter(|(chunk, block)| {
            let base = chunk * ELEMENT_CHUNK;
            block.iter().enumerate().flat_map(move |(k, tri)| {
                let t = base + k;
                let kappa = coeff.value(regions[t]);
                let ke = element_stiffness(mesh.triangle_points(t));
                (0..9).map(move |e| {
                    let (i, j) = (e / 3, e % 3);
                    (tri[i], tri[j], kappa * ke[i][j])
                })
            })
        })
        .collect();
    Ok(CsrMatrix::from_triplets(mesh.num_vertices(), mesh.num_vertices(), &triplets))
}

/// Load vector `b_i = int f phi_i` by the edge-midpoint rule (exact for quadratics).
pub fn assemble_load(mesh: &Mesh, f: &PointFunction) -> Vec<f64> {
    assemble_load_where(mesh, f, |_| true)
}

/// Load vector over the triangles whose region satisfies `include`.
pub fn assemble_load_where(mesh: &Mesh, f: &PointFunction, include: impl Fn(RegionId) -> bool) -> Vec<f64> {
    let mut b = vec![0.0; mesh.num_vertices()];
    if f.is_zero() {
        return b;
    }
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if !include(mesh.tri_region()[t]) {
            continue;
        }
        let p = mesh.triangle_points(t);
        let area = mesh.signed_area(t);
        // f at the midpoint of the edge opposite vertex k
        let fm: [f64; 3] = std::array::from_fn(|k| f.eval((p[(k + 1) % 3] + p[(k + 2) % 3]) * 0.5));
        for i in 0..3 {
            // phi_i is 1/2 at the two adjacent midpoints, 0 at the opposite one
            b[tri[i]] += area / 6.0 * (fm[(i + 1) % 3] + fm[(i + 2) % 3]);
        }
    }
    b
}

/// Row sums of the P1 mass matrix: one third of the incident triangle areas.
pub fn lumped_mass(mesh: &Mesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.signed_area(t) / 3.0;
        for &v in tri {
            w[v] += a;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, tests::unit_square_pair, BoundaryEdge, BoundaryMarker};
    use crate::geometry::Geometry;

    fn right_triangle() -> Mesh {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let e = vec![
            BoundaryEdge::new(0, 1, BoundaryMarker::Outer),
            BoundaryEdge::new(1, 2, BoundaryMarker::Outer),
            BoundaryEdge::new(2, 0, BoundaryMarker::Outer),
        ];
        Mesh::new(v, vec![[0, 1, 2]], vec![RegionId(0)], e, 1.0).unwrap()
    }

    #[test]
    fn unit_right_triangle_element() {
        let k = assemble_stiffness(&right_triangle(), &Coefficient::uniform(1.0)).unwrap().to_dense();
        let expect = nalgebra::DMatrix::from_row_slice(3, 3, &[1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5]);
        assert!((k - expect).amax() < 1e-15);
    }

    #[test]
    fn linear_in_kappa_with_zero_row_sums() {
        let m = generate_mesh(&Geometry::unit_disk(), 0.3).unwrap();
        let k1 = assemble_stiffness(&m, &Coefficient::uniform(1.0)).unwrap();
        let mut k2 = assemble_stiffness(&m, &Coefficient::uniform(2.0)).unwrap();
        k2.scale(0.5);
        assert!((k1.to_dense() - k2.to_dense()).amax() < 1e-14);
        let ones = vec![1.0; m.num_vertices()];
        assert!(k1.mul_vec(&ones).iter().all(|v| v.abs() < 1e-12));
        assert!(k1.symmetry_error() < 1e-15);
    }

    #[test]
    fn loads() {
        let m = right_triangle();
        assert!(assemble_load(&m, &PointFunction::zero()).iter().all(|&v| v == 0.0));
        let b = assemble_load(&m, &PointFunction::Constant(1.0));
        assert!(b.iter().all(|v| (v - 1.0 / 6.0).abs() < 1e-15));
        // exact: int x phi_i = 1/24, 1/12, 1/24
        let b = assemble_load(&m, &PointFunction::Polynomial(vec![[1.0, 1.0, 0.0]]));
        for (v, e) in b.iter().zip([1.0 / 24.0, 1.0 / 12.0, 1.0 / 24.0]) {
            assert!((v - e).abs() < 1e-15, "{b:?}");
        }
    }

    #[test]
    fn lumped_mass_sums_to_area() {
        let m = unit_square_pair();
        assert!((lumped_mass(&m).iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
