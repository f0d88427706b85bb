//! Localized leading term: characteristic functions computed on
//! `delta`-neighborhoods of each inclusion, a boundary corrector computed on a
//! strip along the outer boundary, and the truncated coupling system.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expansion::{compute_u0, ExpansionError, GeomSystem, LeadingTerm, Operators};
use crate::fem::{assemble_load, fmt_sig, norm_of, DirichletReduction, FeField, FemError, NormKind, PointFunction};
use crate::geometry::{Geometry, GeometryError, RegionId, RegionPredicate};
use crate::linalg::dot;
use crate::mesh::{extract_submesh, Mesh, MeshError, SubMesh};

#[derive(Debug, Error)]
pub enum LocalizationError {
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("delta = {delta} leaves no free vertex around {what}; use delta >= 2h = {min}")]
    DeltaTooSmall { what: String, delta: f64, min: f64 },
    #[error("geometry has {geometry} inclusions but the mesh has {mesh}")]
    InclusionCount { geometry: usize, mesh: usize },
    #[error("localized coupling matrix is singular at delta = {delta}: {detail}")]
    Singular { delta: f64, detail: String },
    #[error("empty delta list")]
    EmptySweep,
}

pub type Result<T> = std::result::Result<T, LocalizationError>;

/// How the boundary corrector enters the right-hand side of the truncated system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// `b_l = F . chi_l` only.
    Omit,
    /// Subtract `u00_delta^T K0 chi_l`; `u0_delta` is then the Galerkin
    /// projection onto `u00_delta + span(chi_delta)`.
    #[default]
    Localized,
    /// Subtract the global `u00^T K0 chi_l`.
    Global,
}

/// Localized characteristic functions for one `delta`.
#[derive(Debug, Clone)]
pub struct LocalBasis {
    pub delta: f64,
    pub fields: Vec<FeField>,
    pub k0_fields: Vec<Vec<f64>>,
    /// Triangle count of each neighborhood submesh.
    pub submesh_triangles: Vec<usize>,
}

impl LocalBasis {
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct LocalizedLeadingTerm {
    pub delta: f64,
    pub u0_delta: FeField,
    pub u00_delta: FeField,
    pub c_delta: Vec<f64>,
    pub b_delta: Vec<f64>,
    pub basis: LocalBasis,
    pub geom: Option<GeomSystem>,
}

impl LocalizedLeadingTerm {
    /// `u_c_delta = sum_m c_delta_m chi_delta_m`.
    pub fn coupled_part(&self) -> FeField {
        let n = self.u0_delta.mesh().num_vertices();
        let mut out = vec![0.0; n];
        for (c, chi) in self.c_delta.iter().zip(&self.basis.fields) {
            for (o, v) in out.iter_mut().zip(chi.values()) {
                *o += c * v;
            }
        }
        FeField::new(self.u0_delta.mesh().clone(), out).expect("finite combination")
    }
}

fn check_geometry(ops: &Operators, geom: &Geometry) -> Result<()> {
    if geom.num_inclusions() != ops.num_inclusions() {
        return Err(LocalizationError::InclusionCount {
            geometry: geom.num_inclusions(),
            mesh: ops.num_inclusions(),
        });
    }
    Ok(())
}

/// Laplace-type solve with `K0` on a background submesh: vertices marked in
/// the submesh take their value from `lifting`, the rest are free.
fn local_solve(ops: &Operators, sub: &SubMesh, load: Option<&[f64]>, lifting: &[f64], what: &str, delta: f64) -> Result<Vec<f64>> {
    let n = ops.mesh().num_vertices();
    let markers = sub.mesh.vertex_markers();
    let mut constrained = vec![true; n];
    let mut free = 0;
    for (local, &p) in sub.vertex_map.iter().enumerate() {
        if markers[local].is_empty() {
            constrained[p] = false;
            free += 1;
        }
    }
    if free == 0 {
        return Err(LocalizationError::DeltaTooSmall {
            what: what.to_string(),
            delta,
            min: 2.0 * ops.mesh().h_target(),
        });
    }
    // free vertices are interior to the submesh, so their rows of the parent
    // background stiffness coincide with the submesh stiffness
    let reduction = DirichletReduction::new(ops.k0(), &constrained);
    let zero;
    let b = match load {
        Some(b) => b,
        None => {
            zero = vec![0.0; n];
            &zero
        }
    };
    Ok(reduction.solve(b, lifting, ops.cg()).map_err(ExpansionError::from)?.0)
}

fn neighborhood(mesh: &Mesh, geom: &Geometry, m: usize, delta: f64) -> Result<Option<SubMesh>> {
    let shape = geom.inclusion(RegionId(m))?;
    match extract_submesh(mesh, |p, r| r.is_background() && shape.distance(p) < delta) {
        Ok(sub) => Ok(Some(sub)),
        Err(MeshError::EmptySelection) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// `chi_delta_m`: harmonic on the background part of the `delta`-neighborhood
/// of inclusion `m`, one on the inclusion, zero on the cut boundary, on other
/// inclusions and on the outer boundary; extended by zero.
pub fn localized_characteristics(ops: &Operators, geom: &Geometry, delta: f64) -> Result<LocalBasis> {
    check_geometry(ops, geom)?;
    if !(delta > 0.0) {
        return Err(GeometryError::NonPositiveDelta(delta).into());
    }
    let mesh = ops.mesh();
    let n = mesh.num_vertices();
    let solved: Vec<(Vec<f64>, usize)> = (1..=ops.num_inclusions())
        .into_par_iter()
        .map(|m| {
            let what = format!("inclusion {m}");
            let sub = neighborhood(mesh, geom, m, delta)?.ok_or_else(|| LocalizationError::DeltaTooSmall {
                what: what.clone(),
                delta,
                min: 2.0 * mesh.h_target(),
            })?;
            let mut lifting = vec![0.0; n];
            for &v in ops.inclusion_vertices(m) {
                lifting[v] = 1.0;
            }
            let mut chi = local_solve(ops, &sub, None, &lifting, &what, delta)?;
            let in_sub = sub.parent_to_local(n);
            for (v, x) in chi.iter_mut().enumerate() {
                if in_sub[v].is_none() {
                    *x = lifting[v];
                }
            }
            Ok((chi, sub.mesh.num_triangles()))
        })
        .collect::<Result<_>>()?;
    let mut fields = Vec::with_capacity(solved.len());
    let mut submesh_triangles = Vec::with_capacity(solved.len());
    for (chi, nt) in solved {
        fields.push(FeField::new(mesh.clone(), chi)?);
        submesh_triangles.push(nt);
    }
    let k0_fields = fields.par_iter().map(|chi| ops.k0().mul_vec(chi.values())).collect();
    Ok(LocalBasis { delta, fields, k0_fields, submesh_triangles })
}

/// `u00_delta`: `-laplace u = f` on the background part of the strip of width
/// `delta` along the outer boundary, `g` on the outer boundary and zero on the
/// cut boundary and on inclusions; extended by zero.
pub fn localized_boundary_corrector(ops: &Operators, geom: &Geometry, delta: f64, g: &PointFunction) -> Result<FeField> {
    check_geometry(ops, geom)?;
    g.check()?;
    let strip = geom.boundary_strip(delta)?;
    let mesh = ops.mesh();
    let n = mesh.num_vertices();
    let sub = match extract_submesh(mesh, |p, r| r.is_background() && strip.contains(p)) {
        Ok(sub) => sub,
        Err(MeshError::EmptySelection) => {
            return Err(LocalizationError::DeltaTooSmall {
                what: "the outer boundary".into(),
                delta,
                min: 2.0 * mesh.h_target(),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let mut lifting = vec![0.0; n];
    for &v in ops.outer_vertices() {
        lifting[v] = g.eval(mesh.vertices()[v]);
    }
    // load of f over the strip triangles only
    let local_load = assemble_load(&sub.mesh, ops.f());
    let mut load = vec![0.0; n];
    for (&p, &b) in sub.vertex_map.iter().zip(&local_load) {
        load[p] = b;
    }
    let mut u = local_solve(ops, &sub, Some(&load), &lifting, "the outer boundary", delta)?;
    let in_sub = sub.parent_to_local(n);
    for (v, x) in u.iter_mut().enumerate() {
        if in_sub[v].is_none() {
            *x = lifting[v];
        }
    }
    Ok(FeField::new(mesh.clone(), u)?)
}

/// Solves the truncated coupling system. `global` supplies the global
/// boundary corrector for [`Coupling::Global`].
pub fn localized_u0(
    ops: &Operators,
    geom: &Geometry,
    delta: f64,
    g: &PointFunction,
    coupling: Coupling,
    global: Option<&LeadingTerm>,
) -> Result<LocalizedLeadingTerm> {
    let u00_delta = localized_boundary_corrector(ops, geom, delta, g)?;
    let basis = localized_characteristics(ops, geom, delta)?;
    if basis.is_empty() {
        return Ok(LocalizedLeadingTerm {
            delta,
            u0_delta: u00_delta.clone(),
            u00_delta,
            c_delta: Vec::new(),
            b_delta: Vec::new(),
            basis,
            geom: None,
        });
    }
    let fields: Vec<&[f64]> = basis.fields.iter().map(|f| f.values()).collect();
    let system = GeomSystem::from_products(&fields, &basis.k0_fields)
        .map_err(|e| LocalizationError::Singular { delta, detail: e.to_string() })?;
    let computed;
    let corrector: Option<&FeField> = match coupling {
        Coupling::Omit => None,
        Coupling::Localized => Some(&u00_delta),
        Coupling::Global => match global {
            Some(lt) => Some(&lt.u00),
            None => {
                computed = compute_u0(ops, g)?;
                Some(&computed.u00)
            }
        },
    };
    let b_delta: Vec<f64> = basis
        .fields
        .iter()
        .zip(&basis.k0_fields)
        .map(|(chi, kchi)| {
            let coupling = corrector.map_or(0.0, |u| dot(u.values(), kchi));
            dot(ops.load(), chi.values()) - coupling
        })
        .collect();
    let c_delta = system.solve(&b_delta)?;
    let mut u0 = u00_delta.values().to_vec();
    for (c, chi) in c_delta.iter().zip(&basis.fields) {
        for (u, v) in u0.iter_mut().zip(chi.values()) {
            *u += c * v;
        }
    }
    let u0_delta = FeField::new(ops.mesh().clone(), u0)?;
    Ok(LocalizedLeadingTerm { delta, u0_delta, u00_delta, c_delta, b_delta, basis, geom: Some(system) })
}

/// `||a - b|| / ||reference||`; the absolute difference when the reference vanishes.
pub fn relative_h1_error(a: &FeField, b: &FeField, reference: &FeField, kind: NormKind) -> Result<f64> {
    let d = a.sub(b)?;
    let num = norm_of(d.mesh(), d.values(), kind);
    let den = norm_of(reference.mesh(), reference.values(), kind);
    Ok(if den == 0.0 { num } else { num / den })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaErrors {
    pub e_u0: f64,
    pub e_u00: f64,
    pub e_uc: f64,
    /// `max_m max_v |chi_m - chi_delta_m|`.
    pub max_chi_diff: f64,
}

/// One row of a `delta` sweep; failures are kept as messages.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRow {
    pub delta: f64,
    pub outcome: std::result::Result<DeltaErrors, String>,
}

/// Compares a localized leading term against the global one.
pub fn compare_leading(global: &LeadingTerm, local: &LocalizedLeadingTerm, kind: NormKind) -> Result<DeltaErrors> {
    let uc = global.coupled_part()?;
    let uc_delta = local.coupled_part();
    let mut max_chi_diff: f64 = 0.0;
    for (a, b) in global.basis.fields.iter().zip(&local.basis.fields) {
        max_chi_diff = max_chi_diff.max(a.max_abs_diff(b)?);
    }
    Ok(DeltaErrors {
        e_u0: relative_h1_error(&global.u0, &local.u0_delta, &global.u0, kind)?,
        e_u00: relative_h1_error(&global.u00, &local.u00_delta, &global.u00, kind)?,
        e_uc: relative_h1_error(&uc, &uc_delta, &uc, kind)?,
        max_chi_diff,
    })
}

/// Error table over a list of `delta` values. A failing `delta` produces an
/// error row and the sweep continues.
pub fn delta_sweep(
    ops: &Operators,
    geom: &Geometry,
    global: &LeadingTerm,
    g: &PointFunction,
    deltas: &[f64],
    coupling: Coupling,
    kind: NormKind,
) -> Result<Vec<DeltaRow>> {
    check_geometry(ops, geom)?;
    if deltas.is_empty() {
        return Err(LocalizationError::EmptySweep);
    }
    Ok(deltas
        .iter()
        .map(|&delta| {
            let outcome = localized_u0(ops, geom, delta, g, coupling, Some(global))
                .and_then(|local| compare_leading(global, &local, kind))
                .map_err(|e| e.to_string());
            DeltaRow { delta, outcome }
        })
        .collect())
}

/// CSV `delta,e_u0,e_u00,e_uc`; failed rows carry `error` in every column.
pub fn sweep_csv(rows: &[DeltaRow]) -> String {
    let mut s = String::from("delta,e_u0,e_u00,e_uc\n");
    for r in rows {
        match &r.outcome {
            Ok(e) => {
                let _ = writeln!(s, "{},{},{},{}", fmt_sig(r.delta), fmt_sig(e.e_u0), fmt_sig(e.e_u00), fmt_sig(e.e_uc));
            }
            Err(_) => {
                let _ = writeln!(s, "{},error,error,error", fmt_sig(r.delta));
            }
        }
    }
    s
}

/// Convenience: operators, global leading term and sweep for one problem.
pub fn sweep_problem(
    mesh: Arc<Mesh>,
    geom: &Geometry,
    f: &PointFunction,
    g: &PointFunction,
    deltas: &[f64],
    coupling: Coupling,
) -> Result<Vec<DeltaRow>> {
    let ops = Operators::new(mesh, f.clone(), Default::default())?;
    let global = compute_u0(&ops, g)?;
    delta_sweep(&ops, geom, &global, g, deltas, coupling, NormKind::H1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::harmonic_characteristics;
    use crate::geometry::{Point, Shape};
    use crate::linalg::CgOptions;
    use crate::mesh::generate_mesh;

    fn three() -> (Geometry, Arc<Operators>) {
        let geom = Geometry::new(
            Shape::circle(Point::new(0.0, 0.0), 1.0),
            vec![
                Shape::circle(Point::new(-0.4, 0.0), 0.12),
                Shape::circle(Point::new(0.35, 0.2), 0.12),
                Shape::circle(Point::new(0.1, -0.5), 0.12),
            ],
        );
        let mesh = Arc::new(generate_mesh(&geom, 0.04).unwrap());
        let cg = CgOptions::default().with_tol(1e-12);
        let ops = Arc::new(Operators::new(mesh, PointFunction::Constant(1.0), cg).unwrap());
        (geom, ops)
    }

    #[test]
    fn large_delta_reproduces_global_basis() {
        let (geom, ops) = three();
        let global = harmonic_characteristics(&ops).unwrap();
        let local = localized_characteristics(&ops, &geom, geom.diameter()).unwrap();
        for (a, b) in global.fields.iter().zip(&local.fields) {
            assert!(a.max_abs_diff(b).unwrap() < 1e-10);
        }
        let g = PointFunction::x_plus_y_squared();
        let lt = compute_u0(&ops, &g).unwrap();
        let loc = localized_u0(&ops, &geom, geom.diameter(), &g, Coupling::Localized, None).unwrap();
        let e = compare_leading(&lt, &loc, NormKind::H1).unwrap();
        assert!(e.e_uc < 1e-8 && e.e_u0 < 1e-8 && e.e_u00 < 1e-8, "{e:?}");
    }

    #[test]
    fn local_basis_properties() {
        let (geom, ops) = three();
        let delta = 0.2;
        let basis = localized_characteristics(&ops, &geom, delta).unwrap();
        let mesh = ops.mesh();
        let h = mesh.h_target();
        for (k, chi) in basis.fields.iter().enumerate() {
            let m = k + 1;
            let shape = geom.inclusion(RegionId(m)).unwrap();
            for &v in ops.inclusion_vertices(m) {
                assert_eq!(chi.values()[v], 1.0);
            }
            for (v, &x) in chi.values().iter().enumerate() {
                assert!((-1e-8..=1.0 + 1e-8).contains(&x));
                if shape.distance(mesh.vertices()[v]) > delta + 2.0 * h {
                    assert_eq!(x, 0.0);
                }
            }
            for l in (1..=3).filter(|&l| l != m) {
                for &v in ops.inclusion_vertices(l) {
                    assert_eq!(chi.values()[v], 0.0);
                }
            }
        }
    }

    #[test]
    fn u0_delta_constant_on_inclusions() {
        let (geom, ops) = three();
        let loc = localized_u0(&ops, &geom, 0.25, &PointFunction::x_plus_y_squared(), Coupling::Localized, None).unwrap();
        for (k, &c) in loc.c_delta.iter().enumerate() {
            for &v in ops.inclusion_vertices(k + 1) {
                assert!((loc.u0_delta.values()[v] - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn errors_shrink_with_delta() {
        let (geom, ops) = three();
        let g = PointFunction::x_plus_y_squared();
        let global = compute_u0(&ops, &g).unwrap();
        let rows = delta_sweep(&ops, &geom, &global, &g, &[0.1, 0.3, 0.9], Coupling::Localized, NormKind::H1).unwrap();
        let e: Vec<DeltaErrors> = rows.iter().map(|r| r.outcome.clone().unwrap()).collect();
        assert!(e[2].e_u0 <= e[1].e_u0 && e[1].e_u0 <= e[0].e_u0, "{e:?}");
        assert!(e[2].e_u00 < e[0].e_u00);
    }

    #[test]
    fn tiny_delta_is_a_row_error() {
        let (geom, ops) = three();
        let g = PointFunction::zero();
        let global = compute_u0(&ops, &g).unwrap();
        let rows = delta_sweep(&ops, &geom, &global, &g, &[1e-4, 0.3], Coupling::Localized, NormKind::H1).unwrap();
        assert!(rows[0].outcome.as_ref().unwrap_err().contains("2h"));
        assert!(rows[1].outcome.is_ok());
        let csv = sweep_csv(&rows);
        assert!(csv.lines().nth(1).unwrap().ends_with("error,error,error"));
        assert!(delta_sweep(&ops, &geom, &global, &g, &[], Coupling::Localized, NormKind::H1).is_err());
    }

    #[test]
    fn omitted_coupling_differs_for_nonzero_boundary_data() {
        let (geom, ops) = three();
        let g = PointFunction::x_plus_y_squared();
        let a = localized_u0(&ops, &geom, 0.3, &g, Coupling::Omit, None).unwrap();
        let b = localized_u0(&ops, &geom, 0.3, &g, Coupling::Localized, None).unwrap();
        let c = localized_u0(&ops, &geom, 0.3, &g, Coupling::Global, None).unwrap();
        assert_eq!(a.u00_delta, b.u00_delta);
        assert!(a.c_delta.iter().zip(&b.c_delta).any(|(x, y)| (x - y).abs() > 1e-6));
        assert_eq!(b.basis.len(), c.basis.len());
    }
}
