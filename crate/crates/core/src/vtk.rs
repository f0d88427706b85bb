//! Legacy ASCII VTK output (`UNSTRUCTURED_GRID`) for meshes and nodal fields.

use std::fmt::Write as _;
use std::path::Path;

use crate::mesh::Mesh;

const VTK_TRIANGLE: u8 = 5;

/// Builder for one VTK file. Cell data always contains the region label.
#[derive(Debug, Clone)]
pub struct VtkWriter<'a> {
    mesh: &'a Mesh,
    title: String,
    point_fields: Vec<(String, &'a [f64])>,
}

impl<'a> VtkWriter<'a> {
    pub fn new(mesh: &'a Mesh, title: &str) -> Self {
        // the title line must be a single line of at most 256 characters
        let title: String = title.replace(['\n', '\r'], " ").chars().take(255).collect();
        VtkWriter { mesh, title, point_fields: Vec::new() }
    }

    /// Adds a nodal scalar field. Panics if its length is not the vertex count.
    pub fn point_field(mut self, name: &str, values: &'a [f64]) -> Self {
        assert_eq!(values.len(), self.mesh.num_vertices(), "field {name} has the wrong length");
        let name: String = name.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
        self.point_fields.push((name, values));
        self
    }

    pub fn render(&self) -> String {
        let m = self.mesh;
        let mut s = String::new();
        let _ = writeln!(s, "# vtk DataFile Version 3.0");
        let _ = writeln!(s, "{}", self.title);
        let _ = writeln!(s, "ASCII");
        let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
        let _ = writeln!(s, "POINTS {} double", m.num_vertices());
        for p in m.vertices() {
            let _ = writeln!(s, "{:e} {:e} 0", p.x, p.y);
        }
        let nt = m.num_triangles();
        let _ = writeln!(s, "CELLS {} {}", nt, 4 * nt);
        for t in m.triangles() {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "CELL_TYPES {nt}");
        for _ in 0..nt {
            let _ = writeln!(s, "{VTK_TRIANGLE}");
        }
        let _ = writeln!(s, "CELL_DATA {nt}");
        let _ = writeln!(s, "SCALARS region int 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for r in m.tri_region() {
            let _ = writeln!(s, "{}", r.0);
        }
        if !self.point_fields.is_empty() {
            let _ = writeln!(s, "POINT_DATA {}", m.num_vertices());
            for (name, vals) in &self.point_fields {
                let _ = writeln!(s, "SCALARS {name} double 1");
                let _ = writeln!(s, "LOOKUP_TABLE default");
                for v in *vals {
                    let _ = writeln!(s, "{v:e}");
                }
            }
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.render())
    }
}
