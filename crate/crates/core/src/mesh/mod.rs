//! Conforming triangulations with region labels and boundary markers.

mod generate;
mod io;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::geometry::{GeometryError, Point, RegionId, RegionPredicate};

pub use generate::generate_mesh;
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid mesh: {msg}")]
    Invalid { triangle: Option<usize>, msg: String },
    #[error("triangle {index} is degenerate (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("mesh generation failed: {0}")]
    Generation(String),
    #[error("submesh selection is empty")]
    EmptySelection,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MeshError>;

/// Label carried by a marked mesh edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryMarker {
    /// Part of the outer boundary of the domain.
    Outer,
    /// Interface between the background and inclusion `m`.
    Inclusion(RegionId),
    /// Cut created when extracting a submesh.
    Artificial,
}

impl fmt::Display for BoundaryMarker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryMarker::Outer => write!(f, "outer"),
            BoundaryMarker::Inclusion(m) => write!(f, "inclusion({m})"),
            BoundaryMarker::Artificial => write!(f, "artificial"),
        }
    }
}

/// A marked edge; `vertices` is stored with the smaller index first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub marker: BoundaryMarker,
}

impl BoundaryEdge {
    pub fn new(a: usize, b: usize, marker: BoundaryMarker) -> Self {
        BoundaryEdge { vertices: edge_key(a, b), marker }
    }
}

pub(crate) fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Conforming, counterclockwise triangulation with per-triangle regions.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    tri_region: Vec<RegionId>,
    boundary_edges: Vec<BoundaryEdge>,
    h_target: f64,
}

impl Mesh {
    /// Builds a mesh and checks conformity, orientation and marker coverage.
    ///
    /// Boundary edges are normalized and sorted so that equal meshes compare equal.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        tri_region: Vec<RegionId>,
        mut boundary_edges: Vec<BoundaryEdge>,
        h_target: f64,
    ) -> Result<Self> {
        for e in boundary_edges.iter_mut() {
            e.vertices = edge_key(e.vertices[0], e.vertices[1]);
        }
        boundary_edges.sort();
        let mesh = Mesh { vertices, triangles, tri_region, boundary_edges, h_target };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let invalid = |triangle: Option<usize>, msg: String| MeshError::Invalid { triangle, msg };
        if self.tri_region.len() != self.triangles.len() {
            return Err(invalid(None, "region count differs from triangle count".into()));
        }
        if let Some(i) = self.vertices.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(invalid(None, format!("vertex {i} has non-finite coordinates")));
        }
        let nv = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= nv) {
                return Err(invalid(Some(t), format!("triangle {t} references missing vertex {v}")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(invalid(Some(t), format!("triangle {t} repeats a vertex")));
            }
            let area = self.signed_area(t);
            if !(area > 0.0) {
                return Err(MeshError::DegenerateTriangle { index: t, area });
            }
        }
        // every directed edge appears at most once; an undirected edge at most twice
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if directed.insert((a, b), t).is_some() {
                    return Err(invalid(
                        Some(t),
                        format!("edge ({a}, {b}) of triangle {t} is shared with inconsistent orientation or by more than two triangles"),
                    ));
                }
            }
        }
        let edges = self.edge_triangles();
        let mut seen = std::collections::HashSet::new();
        for e in &self.boundary_edges {
            if !edges.contains_key(&e.vertices) {
                return Err(invalid(None, format!("marked edge {:?} is not a mesh edge", e.vertices)));
            }
            if !seen.insert(e.vertices) {
                return Err(invalid(None, format!("edge {:?} is marked twice", e.vertices)));
            }
            if let BoundaryMarker::Inclusion(m) = e.marker {
                if m.0 == 0 {
                    return Err(invalid(None, "inclusion marker with region 0".into()));
                }
            }
        }
        for (key, tris) in &edges {
            if tris.len() == 1 && !seen.contains(key) {
                return Err(invalid(
                    Some(tris[0]),
                    format!("boundary edge {key:?} of triangle {} has no marker", tris[0]),
                ));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn tri_region(&self) -> &[RegionId] {
        &self.tri_region
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn h_target(&self) -> f64 {
        self.h_target
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * (b - a).cross(c - a)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// Largest region id present (the number of inclusions for generated meshes).
    pub fn num_regions(&self) -> usize {
        self.tri_region.iter().map(|r| r.0).max().unwrap_or(0)
    }

    /// Map from undirected edge to the (one or two) adjacent triangles.
    pub fn edge_triangles(&self) -> HashMap<[usize; 2], Vec<usize>> {
        let mut map: HashMap<[usize; 2], Vec<usize>> = HashMap::with_capacity(2 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                map.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
            }
        }
        map
    }

    pub fn num_edges(&self) -> usize {
        self.edge_triangles().len()
    }

    /// Edges belonging to exactly one triangle, sorted.
    pub fn topological_boundary(&self) -> Vec<[usize; 2]> {
        let mut out: Vec<[usize; 2]> = self
            .edge_triangles()
            .into_iter()
            .filter(|(_, t)| t.len() == 1)
            .map(|(k, _)| k)
            .collect();
        out.sort();
        out
    }

    /// For each vertex, the sorted, deduplicated markers of its incident marked edges.
    pub fn vertex_markers(&self) -> Vec<Vec<BoundaryMarker>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for e in &self.boundary_edges {
            for &v in &e.vertices {
                out[v].push(e.marker);
            }
        }
        for m in out.iter_mut() {
            m.sort();
            m.dedup();
        }
        out
    }

    /// Vertices touching an edge with the given marker, ascending.
    pub fn marked_vertices(&self, marker: BoundaryMarker) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|e| e.marker == marker)
            .flat_map(|e| e.vertices)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Vertices of every triangle with the given region, ascending.
    pub fn region_vertices(&self, region: RegionId) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .triangles
            .iter()
            .zip(&self.tri_region)
            .filter(|(_, &r)| r == region)
            .flat_map(|(t, _)| *t)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }
}

/// A mesh cut out of a parent mesh, with maps back to parent indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SubMesh {
    pub mesh: Mesh,
    /// `vertex_map[local] = parent vertex`.
    pub vertex_map: Vec<usize>,
    /// `triangle_map[local] = parent triangle`.
    pub triangle_map: Vec<usize>,
}

impl SubMesh {
    /// Parent-sized lookup table: `Some(local)` for vertices in the submesh.
    pub fn parent_to_local(&self, parent_vertices: usize) -> Vec<Option<usize>> {
        let mut map = vec![None; parent_vertices];
        for (local, &p) in self.vertex_map.iter().enumerate() {
            map[p] = Some(local);
        }
        map
    }

    pub fn restrict(&self, parent_values: &[f64]) -> Vec<f64> {
        self.vertex_map.iter().map(|&p| parent_values[p]).collect()
    }

    /// Writes local values into a parent-sized vector, leaving other entries untouched.
    pub fn inject_into(&self, local_values: &[f64], parent_values: &mut [f64]) {
        for (&p, &v) in self.vertex_map.iter().zip(local_values) {
            parent_values[p] = v;
        }
    }
}

/// Keeps the triangles whose centroid (and region) satisfy `keep`.
///
/// Marked parent edges keep their markers; new cut edges are marked
/// [`BoundaryMarker::Artificial`].
pub fn extract_submesh<F>(mesh: &Mesh, keep: F) -> Result<SubMesh>
where
    F: Fn(Point, RegionId) -> bool,
{
    let triangle_map: Vec<usize> = (0..mesh.num_triangles())
        .filter(|&t| keep(mesh.centroid(t), mesh.tri_region[t]))
        .collect();
    if triangle_map.is_empty() {
        return Err(MeshError::EmptySelection);
    }
    let mut local = vec![usize::MAX; mesh.num_vertices()];
    for &t in &triangle_map {
        for &v in &mesh.triangles[t] {
            local[v] = 0;
        }
    }
    let mut vertex_map = Vec::new();
    for (v, slot) in local.iter_mut().enumerate() {
        if *slot == 0 {
            *slot = vertex_map.len();
            vertex_map.push(v);
        }
    }
    let vertices: Vec<Point> = vertex_map.iter().map(|&v| mesh.vertices[v]).collect();
    let triangles: Vec<[usize; 3]> = triangle_map
        .iter()
        .map(|&t| mesh.triangles[t].map(|v| local[v]))
        .collect();
    let tri_region: Vec<RegionId> = triangle_map.iter().map(|&t| mesh.tri_region[t]).collect();

    let parent_markers: HashMap<[usize; 2], BoundaryMarker> =
        mesh.boundary_edges.iter().map(|e| (e.vertices, e.marker)).collect();
    let mut sub_edges: HashMap<[usize; 2], usize> = HashMap::new();
    for tri in &triangles {
        for k in 0..3 {
            *sub_edges.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default() += 1;
        }
    }
    let mut boundary_edges = Vec::new();
    for (key, count) in &sub_edges {
        let parent_key = edge_key(vertex_map[key[0]], vertex_map[key[1]]);
        match parent_markers.get(&parent_key) {
            Some(&marker) => boundary_edges.push(BoundaryEdge::new(key[0], key[1], marker)),
            None if *count == 1 => {
                boundary_edges.push(BoundaryEdge::new(key[0], key[1], BoundaryMarker::Artificial))
            }
            None => {}
        }
    }
    let sub = Mesh::new(vertices, triangles, tri_region, boundary_edges, mesh.h_target)?;
    Ok(SubMesh { mesh: sub, vertex_map, triangle_map })
}

/// Submesh of the triangles whose centroid lies in `region`.
pub fn extract_predicate<P: RegionPredicate>(mesh: &Mesh, region: &P) -> Result<SubMesh> {
    extract_submesh(mesh, |p, _| region.contains(p))
}

/// Submesh of the triangles carrying one of the given region labels.
pub fn extract_regions(mesh: &Mesh, regions: &[RegionId]) -> Result<SubMesh> {
    extract_submesh(mesh, |_, r| regions.contains(&r))
}

/// Geometric quality statistics of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub num_vertices: usize,
    pub num_triangles: usize,
    /// Smallest interior angle, degrees.
    pub min_angle_deg: f64,
    /// Largest circumradius / (2 * inradius); 1 for an equilateral triangle.
    pub max_aspect: f64,
    pub max_circumradius: f64,
    /// Fraction of interior edges whose two opposite angles sum to at most pi.
    pub delaunay_fraction: f64,
}

fn angles(p: [Point; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for k in 0..3 {
        let u = p[(k + 1) % 3] - p[k];
        let v = p[(k + 2) % 3] - p[k];
        out[k] = u.cross(v).abs().atan2(u.dot(v));
    }
    out
}

pub(crate) fn circumradius(p: [Point; 3]) -> f64 {
    let a = p[1].dist(p[2]);
    let b = p[0].dist(p[2]);
    let c = p[0].dist(p[1]);
    let area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]).abs();
    a * b * c / (4.0 * area)
}

pub fn mesh_quality(mesh: &Mesh) -> QualityReport {
    let mut min_angle = f64::INFINITY;
    let mut max_aspect: f64 = 0.0;
    let mut max_r: f64 = 0.0;
    for t in 0..mesh.num_triangles() {
        let p = mesh.triangle_points(t);
        for a in angles(p) {
            min_angle = min_angle.min(a);
        }
        let a = p[1].dist(p[2]);
        let b = p[0].dist(p[2]);
        let c = p[0].dist(p[1]);
        let area = mesh.signed_area(t);
        let inradius = 2.0 * area / (a + b + c);
        let r = circumradius(p);
        max_r = max_r.max(r);
        max_aspect = max_aspect.max(r / (2.0 * inradius));
    }
    let mut interior = 0usize;
    let mut delaunay = 0usize;
    for (key, tris) in mesh.edge_triangles() {
        if tris.len() != 2 {
            continue;
        }
        interior += 1;
        let mut sum = 0.0;
        for &t in &tris {
            let tri = mesh.triangles[t];
            let k = (0..3).find(|&k| !key.contains(&tri[k])).expect("opposite vertex");
            sum += angles(mesh.triangle_points(t))[k];
        }
        if sum <= std::f64::consts::PI + 1e-12 {
            delaunay += 1;
        }
    }
    QualityReport {
        num_vertices: mesh.num_vertices(),
        num_triangles: mesh.num_triangles(),
        min_angle_deg: min_angle.to_degrees(),
        max_aspect,
        max_circumradius: max_r,
        delaunay_fraction: if interior == 0 { 1.0 } else { delaunay as f64 / interior as f64 },
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Unit square split along the diagonal (0,0)-(1,1).
    pub(crate) fn unit_square_pair() -> Mesh {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let t = vec![[0, 1, 2], [0, 2, 3]];
        let e = vec![
            BoundaryEdge::new(0, 1, BoundaryMarker::Outer),
            BoundaryEdge::new(1, 2, BoundaryMarker::Outer),
            BoundaryEdge::new(2, 3, BoundaryMarker::Outer),
            BoundaryEdge::new(3, 0, BoundaryMarker::Outer),
        ];
        Mesh::new(v, t, vec![RegionId(0); 2], e, 1.0).unwrap()
    }

    #[test]
    fn equilateral_quality() {
        let s = 3f64.sqrt() / 2.0;
        let m = Mesh::new(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, s)],
            vec![[0, 1, 2]],
            vec![RegionId(0)],
            vec![
                BoundaryEdge::new(0, 1, BoundaryMarker::Outer),
                BoundaryEdge::new(1, 2, BoundaryMarker::Outer),
                BoundaryEdge::new(0, 2, BoundaryMarker::Outer),
            ],
            1.0,
        )
        .unwrap();
        let q = mesh_quality(&m);
        assert!((q.min_angle_deg - 60.0).abs() < 1e-10);
        assert!((q.max_aspect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_pair_quality() {
        let q = mesh_quality(&unit_square_pair());
        assert!((q.min_angle_deg - 45.0).abs() < 1e-10);
        assert_eq!(q.delaunay_fraction, 1.0);
    }

    #[test]
    fn rejects_clockwise_and_missing_vertex() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let marks = vec![
            BoundaryEdge::new(0, 1, BoundaryMarker::Outer),
            BoundaryEdge::new(1, 2, BoundaryMarker::Outer),
            BoundaryEdge::new(0, 2, BoundaryMarker::Outer),
        ];
        assert!(matches!(
            Mesh::new(v.clone(), vec![[0, 2, 1]], vec![RegionId(0)], marks.clone(), 1.0),
            Err(MeshError::DegenerateTriangle { index: 0, .. })
        ));
        assert!(matches!(
            Mesh::new(v.clone(), vec![[0, 1, 5]], vec![RegionId(0)], marks.clone(), 1.0),
            Err(MeshError::Invalid { triangle: Some(0), .. })
        ));
        // unmarked boundary edge
        assert!(Mesh::new(v, vec![[0, 1, 2]], vec![RegionId(0)], marks[..2].to_vec(), 1.0).is_err());
    }

    #[test]
    fn rejects_non_manifold_edge() {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, 1.0),
            Point::new(0.5, 2.0),
        ];
        // both triangles traverse edge 0 -> 1 in the same direction
        let r = Mesh::new(v, vec![[0, 1, 2], [0, 1, 3]], vec![RegionId(0); 2], vec![], 1.0);
        assert!(matches!(r, Err(MeshError::Invalid { triangle: Some(1), .. })));
    }

    #[test]
    fn extract_everything_is_identity() {
        let m = unit_square_pair();
        let s = extract_submesh(&m, |_, _| true).unwrap();
        assert_eq!(s.mesh, m);
        assert_eq!(s.vertex_map, vec![0, 1, 2, 3]);
        assert_eq!(s.triangle_map, vec![0, 1]);
    }

    #[test]
    fn extract_marks_cut_edges_artificial() {
        let m = unit_square_pair();
        let s = extract_submesh(&m, |p, _| p.x > p.y).unwrap();
        assert_eq!(s.triangle_map, vec![0]);
        let art: Vec<_> = s
            .mesh
            .boundary_edges()
            .iter()
            .filter(|e| e.marker == BoundaryMarker::Artificial)
            .collect();
        assert_eq!(art.len(), 1);
        let [a, b] = art[0].vertices;
        assert_eq!(edge_key(s.vertex_map[a], s.vertex_map[b]), [0, 2]);
        assert!(matches!(extract_submesh(&m, |_, _| false), Err(MeshError::EmptySelection)));
    }
}
