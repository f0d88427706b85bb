use std::collections::HashMap;

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::{edge_key, BoundaryEdge, BoundaryMarker, Mesh, MeshError, Result};
use crate::geometry::{point_in_polygon, Geometry, Point, RegionId};

/// Minimum angle requested from the Delaunay refinement, degrees.
const ANGLE_LIMIT_DEG: f64 = 25.0;

/// Target triangle area relative to `h^2`. With the angle limit this keeps
/// circumradii at or below `h` for all but a handful of boundary triangles.
const AREA_FACTOR: f64 = 0.3;

/// Generates a conforming mesh that resolves every inclusion boundary.
///
/// All boundary curves are replaced by polylines with chords no longer than
/// `h`, triangulated with a constrained Delaunay triangulation and refined
/// until the minimum angle and maximum area bounds hold. Triangles are
/// labelled by the inclusion polygon containing their centroid.
pub fn generate_mesh(geom: &Geometry, h: f64) -> Result<Mesh> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(MeshError::Generation(format!("mesh size must be positive, got {h}")));
    }
    let report = geom
        .check()
        .map_err(|e| MeshError::Generation(format!("invalid geometry: {e}")))?;
    for (i, inc) in geom.inclusions.iter().enumerate() {
        let size = inc.feature_size();
        if h >= 0.5 * size {
            return Err(MeshError::Generation(format!(
                "h = {h} is not below half the size ({size}) of inclusion {}",
                i + 1
            )));
        }
    }
    if let Some((a, b)) = report.closest_pair {
        if report.min_separation < 0.25 * h {
            return Err(MeshError::Generation(format!(
                "inclusions {a} and {b} are {:.3e} apart, too close to separate at h = {h}",
                report.min_separation
            )));
        }
    }
    if let Some(m) = report.closest_to_boundary {
        if report.min_clearance < 0.25 * h {
            return Err(MeshError::Generation(format!(
                "inclusion {m} is {:.3e} from the outer boundary, too close at h = {h}",
                report.min_clearance
            )));
        }
    }

    let domain_loop = geom.domain.discretize(h);
    let inclusion_loops: Vec<Vec<Point>> = geom.inclusions.iter().map(|s| s.discretize(h)).collect();

    let mut points = Vec::new();
    let mut constraints = Vec::new();
    for lp in std::iter::once(&domain_loop).chain(inclusion_loops.iter()) {
        let start = points.len();
        let n = lp.len();
        points.extend(lp.iter().map(|p| Point2::new(p.x, p.y)));
        constraints.extend((0..n).map(|k| [start + k, start + (k + 1) % n]));
    }

    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(points, constraints)
        .map_err(|e| MeshError::Generation(format!("triangulation failed: {e:?}")))?;
    let domain_area = geom.domain.area();
    let max_area = AREA_FACTOR * h * h;
    let budget = (50.0 * domain_area / max_area) as usize + 10_000;
    let result = cdt.refine(
        RefinementParameters::<f64>::new()
            .with_angle_limit(AngleLimit::from_deg(ANGLE_LIMIT_DEG))
            .with_max_allowed_area(max_area)
            .with_max_additional_vertices(budget),
    );
    if !result.refinement_complete {
        return Err(MeshError::Generation(format!(
            "refinement did not complete within {budget} additional vertices"
        )));
    }

    let spade_points: Vec<Point> = cdt
        .vertices()
        .map(|v| {
            let p = v.position();
            Point::new(p.x, p.y)
        })
        .collect();

    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    let mut regions = Vec::with_capacity(cdt.num_inner_faces());
    for face in cdt.inner_faces() {
        let idx = face.vertices().map(|v| v.fix().index());
        let [a, b, c] = idx.map(|i| spade_points[i]);
        let centroid = Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
        if !point_in_polygon(centroid, &domain_loop) {
            continue;
        }
        let region = inclusion_loops
            .iter()
            .position(|lp| point_in_polygon(centroid, lp))
            .map_or(RegionId::BACKGROUND, |i| RegionId(i + 1));
        let tri = if (b - a).cross(c - a) > 0.0 { idx } else { [idx[0], idx[2], idx[1]] };
        triangles.push(tri);
        regions.push(region);
    }

    // compact the vertex numbering to the vertices actually used
    let mut remap = vec![usize::MAX; spade_points.len()];
    for tri in &triangles {
        for &v in tri {
            remap[v] = 0;
        }
    }
    let mut vertices = Vec::new();
    for (v, slot) in remap.iter_mut().enumerate() {
        if *slot == 0 {
            *slot = vertices.len();
            vertices.push(spade_points[v]);
        }
    }
    for tri in triangles.iter_mut() {
        *tri = tri.map(|v| remap[v]);
    }

    let mut edge_tris: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            edge_tris.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
        }
    }
    let mut boundary = Vec::new();
    for (key, tris) in &edge_tris {
        match tris.as_slice() {
            [_] => boundary.push(BoundaryEdge::new(key[0], key[1], BoundaryMarker::Outer)),
            [s, t] if regions[*s] != regions[*t] => {
                let (rs, rt) = (regions[*s], regions[*t]);
                let m = if rs.is_background() {
                    rt
                } else if rt.is_background() {
                    rs
                } else {
                    return Err(MeshError::Generation(format!(
                        "inclusions {rs} and {rt} share a mesh edge"
                    )));
                };
                boundary.push(BoundaryEdge::new(key[0], key[1], BoundaryMarker::Inclusion(m)));
            }
            _ => {}
        }
    }
    let mesh = Mesh::new(vertices, triangles, regions, boundary, h)?;
    log::debug!(
        "generated mesh: {} vertices, {} triangles (h = {h})",
        mesh.num_vertices(),
        mesh.num_triangles()
    );
    Ok(mesh)
}
