use super::{assemble_load_where, assemble_stiffness, Coefficient, FemError, PointFunction, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::{BoundaryMarker, Mesh};

/// Consistent boundary flux of a background field through one marked boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxData {
    pub marker: BoundaryMarker,
    /// Boundary vertices, ascending.
    pub vertices: Vec<usize>,
    /// `lambda_i` for each boundary vertex.
    pub values: Vec<f64>,
    /// `sum_i lambda_i`, the discrete total flux.
    pub total: f64,
}

/// `lambda_i = (K u)_i - load_i` at the given vertices.
pub fn consistent_flux(k: &CsrMatrix, load: &[f64], u: &[f64], vertices: &[usize]) -> Vec<f64> {
    vertices
        .iter()
        .map(|&i| {
            let (cols, vals) = k.row(i);
            let ku: f64 = cols.iter().zip(vals).map(|(&c, &v)| v * u[c]).sum();
            ku - load[i]
        })
        .collect()
}

/// Residual-based flux `lambda_i = int grad u . grad phi_i - int f phi_i`
/// over the background triangles of `mesh`, for the vertices on `target`.
///
/// `lambda` represents `z -> int (grad u . n) z` on the target boundary,
/// with `n` the outward normal of the background region.
pub fn boundary_flux_functional(
    mesh: &Mesh,
    u: &[f64],
    f: &PointFunction,
    target: BoundaryMarker,
) -> Result<FluxData> {
    if u.len() != mesh.num_vertices() {
        return Err(FemError::LengthMismatch { len: u.len(), expected: mesh.num_vertices() });
    }
    let vertices = mesh.marked_vertices(target);
    if vertices.is_empty() {
        return Err(FemError::MissingMarker(target.to_string()));
    }
    let k = assemble_stiffness(mesh, &Coefficient::background_only())?;
    let load = assemble_load_where(mesh, f, |r| r.is_background());
    let values = consistent_flux(&k, &load, u, &vertices);
    let total = values.iter().sum();
    Ok(FluxData { marker: target, vertices, values, total })
}
