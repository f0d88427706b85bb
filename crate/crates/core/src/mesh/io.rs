//! Line-oriented text format for meshes.
//!
//! ```text
//! # hicomsfem mesh v1
//! h_target 0.02
//! vertices 4
//! 0 0 0
//! 1 1 0
//! ...
//! triangles 2
//! 0 0 1 2 0          # index v0 v1 v2 region
//! ...
//! boundary_edges 4
//! 0 1 outer 0        # v0 v1 kind arg
//! 5 9 inclusion 3
//! 7 8 artificial 0
//! ```
//!
//! `#` starts a comment. `h_target` and the `boundary_edges` section are
//! optional; without markers every topological boundary edge is taken to be
//! part of the outer boundary. Clockwise triangles are reoriented on load.

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryEdge, BoundaryMarker, Mesh, MeshError, Result};
use crate::geometry::{Point, RegionId};

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    s.push_str("# hicomsfem mesh v1\n");
    s.push_str("# vertices: index x y | triangles: index v0 v1 v2 region | boundary_edges: v0 v1 kind arg\n");
    let _ = writeln!(s, "h_target {:?}", mesh.h_target());
    let _ = writeln!(s, "vertices {}", mesh.num_vertices());
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(s, "{i} {:?} {:?}", p.x, p.y);
    }
    let _ = writeln!(s, "triangles {}", mesh.num_triangles());
    for (i, (t, r)) in mesh.triangles().iter().zip(mesh.tri_region()).enumerate() {
        let _ = writeln!(s, "{i} {} {} {} {}", t[0], t[1], t[2], r.0);
    }
    let _ = writeln!(s, "boundary_edges {}", mesh.boundary_edges().len());
    for e in mesh.boundary_edges() {
        let (kind, arg) = match e.marker {
            BoundaryMarker::Outer => ("outer", 0),
            BoundaryMarker::Inclusion(m) => ("inclusion", m.0),
            BoundaryMarker::Artificial => ("artificial", 0),
        };
        let _ = writeln!(s, "{} {} {kind} {arg}", e.vertices[0], e.vertices[1]);
    }
    s
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-empty line with comments stripped, with its 1-based number.
    fn next_line(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let content = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = content.split_whitespace().collect();
            if !toks.is_empty() {
                return Some((i + 1, toks));
            }
        }
        None
    }
}

fn perr(line: usize, msg: impl Into<String>) -> MeshError {
    MeshError::Parse { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse().map_err(|_| perr(line, format!("cannot parse {what} from '{tok}'")))
}

fn expect_fields(line: usize, toks: &[&str], n: usize, section: &str) -> Result<()> {
    if toks.len() != n {
        return Err(perr(line, format!("{section} entry needs {n} fields, found {}", toks.len())));
    }
    Ok(())
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = Lines { inner: text.lines().enumerate() };
    let mut h_target = None;
    let mut vertices: Vec<Point> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut regions: Vec<RegionId> = Vec::new();
    let mut tri_lines: Vec<usize> = Vec::new();
    let mut edges: Option<Vec<BoundaryEdge>> = None;
    let mut last_line = 0;

    while let Some((line, toks)) = lines.next_line() {
        last_line = line;
        match toks[0] {
            "h_target" => {
                expect_fields(line, &toks, 2, "h_target")?;
                h_target = Some(num::<f64>(line, toks[1], "h_target")?);
            }
            "vertices" => {
                expect_fields(line, &toks, 2, "section header")?;
                let n: usize = num(line, toks[1], "vertex count")?;
                for i in 0..n {
                    let (l, t) = lines.next_line().ok_or_else(|| perr(line, "truncated vertices section"))?;
                    expect_fields(l, &t, 3, "vertex")?;
                    if num::<usize>(l, t[0], "vertex index")? != i {
                        return Err(perr(l, format!("expected vertex index {i}")));
                    }
                    vertices.push(Point::new(num(l, t[1], "x")?, num(l, t[2], "y")?));
                }
            }
            "triangles" => {
                expect_fields(line, &toks, 2, "section header")?;
                let n: usize = num(line, toks[1], "triangle count")?;
                for i in 0..n {
                    let (l, t) = lines.next_line().ok_or_else(|| perr(line, "truncated triangles section"))?;
                    expect_fields(l, &t, 5, "triangle")?;
                    if num::<usize>(l, t[0], "triangle index")? != i {
                        return Err(perr(l, format!("expected triangle index {i}")));
                    }
                    let mut tri = [0usize; 3];
                    for k in 0..3 {
                        tri[k] = num(l, t[k + 1], "vertex reference")?;
                        if tri[k] >= vertices.len() {
                            return Err(perr(l, format!("triangle {i} references missing vertex {}", tri[k])));
                        }
                    }
                    let [a, b, c] = tri.map(|v| vertices[v]);
                    let area = (b - a).cross(c - a);
                    if area == 0.0 || !area.is_finite() {
                        return Err(perr(l, format!("triangle {i} is degenerate")));
                    }
                    if area < 0.0 {
                        tri.swap(1, 2);
                    }
                    triangles.push(tri);
                    regions.push(RegionId(num(l, t[4], "region")?));
                    tri_lines.push(l);
                }
            }
            "boundary_edges" => {
                expect_fields(line, &toks, 2, "section header")?;
                let n: usize = num(line, toks[1], "edge count")?;
                let mut list = Vec::with_capacity(n);
                for _ in 0..n {
                    let (l, t) = lines.next_line().ok_or_else(|| perr(line, "truncated boundary_edges section"))?;
                    expect_fields(l, &t, 4, "boundary edge")?;
                    let a: usize = num(l, t[0], "vertex reference")?;
                    let b: usize = num(l, t[1], "vertex reference")?;
                    let arg: usize = num(l, t[3], "marker argument")?;
                    let marker = match t[2] {
                        "outer" => BoundaryMarker::Outer,
                        "artificial" => BoundaryMarker::Artificial,
                        "inclusion" if arg >= 1 => BoundaryMarker::Inclusion(RegionId(arg)),
                        "inclusion" => return Err(perr(l, "inclusion marker needs a region >= 1")),
                        other => return Err(perr(l, format!("unknown marker kind '{other}'"))),
                    };
                    list.push(BoundaryEdge::new(a, b, marker));
                }
                edges = Some(list);
            }
            other => return Err(perr(line, format!("unknown section '{other}'"))),
        }
    }
    if triangles.is_empty() {
        return Err(perr(last_line, "mesh has no triangles"));
    }
    let verts = &vertices;
    let h = h_target.unwrap_or_else(|| {
        triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| verts[t[k]].dist(verts[t[(k + 1) % 3]])))
            .fold(0.0, f64::max)
    });
    let edges = match edges {
        Some(e) => e,
        None => {
            // markers absent: the whole topological boundary is outer boundary
            let probe = Mesh {
                vertices: vertices.clone(),
                triangles: triangles.clone(),
                tri_region: regions.clone(),
                boundary_edges: Vec::new(),
                h_target: h,
            };
            probe
                .topological_boundary()
                .into_iter()
                .map(|[a, b]| BoundaryEdge::new(a, b, BoundaryMarker::Outer))
                .collect()
        }
    };
    Mesh::new(vertices, triangles, regions, edges, h).map_err(|e| match e {
        MeshError::Invalid { triangle: Some(t), msg } => perr(tri_lines[t], msg),
        MeshError::DegenerateTriangle { index, area } => {
            perr(tri_lines[index], format!("triangle {index} is degenerate (area {area:e})"))
        }
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tests::unit_square_pair;

    #[test]
    fn round_trip() {
        let m = unit_square_pair();
        let back = parse_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn external_square() {
        let text = "vertices 4\n0 0 0\n1 1 0\n2 1 1\n3 0 1\ntriangles 2\n0 0 1 2 0\n1 0 3 2 0\n";
        let m = parse_mesh(text).unwrap();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.boundary_edges().len(), 4);
        assert!(m.total_area() > 0.999);
    }

    #[test]
    fn missing_vertex_reports_line() {
        let text = "vertices 3\n0 0 0\n1 1 0\n2 0 1\ntriangles 1\n0 0 1 7 0\n";
        match parse_mesh(text) {
            Err(MeshError::Parse { line: 6, msg }) => assert!(msg.contains("missing vertex 7")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_conforming_reports_line() {
        // three triangles on one edge
        let text = "vertices 5\n0 0 0\n1 1 0\n2 0.5 1\n3 0.5 -1\n4 0.5 2\n\
                    triangles 3\n0 0 1 2 0\n1 1 0 3 0\n2 0 1 4 0\n";
        match parse_mesh(text) {
            Err(MeshError::Parse { line, .. }) => assert!(line >= 8, "line {line}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn garbage_reports_line() {
        let text = "vertices 2\n0 0 0\n1 x 0\n";
        assert!(matches!(parse_mesh(text), Err(MeshError::Parse { line: 3, .. })));
    }
}
