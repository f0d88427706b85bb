use super::quadrature::DEGREE5;
use super::{element_gradients, FeField, FemError, Result};
use crate::geometry::Point;
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    #[default]
    H1,
    H1Semi,
    L2,
}

/// Squared L2 norm and squared H1 seminorm of a P1 function, element-exact.
fn squared_parts(mesh: &Mesh, values: &[f64]) -> (f64, f64) {
    let mut l2 = 0.0;
    let mut semi = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (g, area) = element_gradients(mesh.triangle_points(t));
        let u = tri.map(|v| values[v]);
        let gx = g[0][0] * u[0] + g[1][0] * u[1] + g[2][0] * u[2];
        let gy = g[0][1] * u[0] + g[1][1] * u[1] + g[2][1] * u[2];
        semi += area * (gx * gx + gy * gy);
        let sq = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        let cross = u[0] * u[1] + u[1] * u[2] + u[2] * u[0];
        l2 += area / 6.0 * (sq + cross);
    }
    (l2, semi)
}

/// Norm of the P1 function with vertex values `values` on `mesh`.
pub fn norm_of(mesh: &Mesh, values: &[f64], kind: NormKind) -> f64 {
    let (l2, semi) = squared_parts(mesh, values);
    match kind {
        NormKind::H1 => (l2 + semi).sqrt(),
        NormKind::H1Semi => semi.sqrt(),
        NormKind::L2 => l2.sqrt(),
    }
}

pub fn l2_norm(u: &FeField) -> f64 {
    norm_of(u.mesh(), u.values(), NormKind::L2)
}

pub fn h1_seminorm(u: &FeField) -> f64 {
    norm_of(u.mesh(), u.values(), NormKind::H1Semi)
}

pub fn h1_norm(u: &FeField) -> f64 {
    norm_of(u.mesh(), u.values(), NormKind::H1)
}

/// `||a - b|| / ||reference||`.
pub fn relative_error(a: &FeField, b: &FeField, reference: &FeField, kind: NormKind) -> Result<f64> {
    let d = a.sub(b)?;
    let r = norm_of(reference.mesh(), reference.values(), kind);
    if r == 0.0 {
        return Err(FemError::Config("reference field has zero norm".into()));
    }
    Ok(norm_of(d.mesh(), d.values(), kind) / r)
}

/// Squared error components between a P1 field and an exact function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactError {
    pub l2_error_sq: f64,
    pub semi_error_sq: f64,
    pub l2_exact_sq: f64,
    pub semi_exact_sq: f64,
}

impl ExactError {
    pub fn h1_error(&self) -> f64 {
        (self.l2_error_sq + self.semi_error_sq).sqrt()
    }

    pub fn h1_exact(&self) -> f64 {
        (self.l2_exact_sq + self.semi_exact_sq).sqrt()
    }

    pub fn semi_error(&self) -> f64 {
        self.semi_error_sq.sqrt()
    }

    pub fn l2_error(&self) -> f64 {
        self.l2_error_sq.sqrt()
    }
}

/// Error of `uh` against `u` (with gradient `grad`) by a degree-5 rule on every triangle.
pub fn h1_error_exact(uh: &FeField, u: impl Fn(Point) -> f64, grad: impl Fn(Point) -> [f64; 2]) -> ExactError {
    let mesh = uh.mesh();
    let vals = uh.values();
    let mut e = ExactError { l2_error_sq: 0.0, semi_error_sq: 0.0, l2_exact_sq: 0.0, semi_exact_sq: 0.0 };
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let (g, area) = element_gradients(p);
        let uv = tri.map(|v| vals[v]);
        let gh = [
            g[0][0] * uv[0] + g[1][0] * uv[1] + g[2][0] * uv[2],
            g[0][1] * uv[0] + g[1][1] * uv[1] + g[2][1] * uv[2],
        ];
        for (l, w) in DEGREE5.iter() {
            let x = Point::new(
                l[0] * p[0].x + l[1] * p[1].x + l[2] * p[2].x,
                l[0] * p[0].y + l[1] * p[1].y + l[2] * p[2].y,
            );
            let wa = w * area;
            let ue = u(x);
            let ge = grad(x);
            let uhx = l[0] * uv[0] + l[1] * uv[1] + l[2] * uv[2];
            e.l2_error_sq += wa * (ue - uhx).powi(2);
            e.semi_error_sq += wa * ((ge[0] - gh[0]).powi(2) + (ge[1] - gh[1]).powi(2));
            e.l2_exact_sq += wa * ue * ue;
            e.semi_exact_sq += wa * (ge[0] * ge[0] + ge[1] * ge[1]);
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::Geometry;
    use crate::mesh::generate_mesh;

    #[test]
    fn constant_field() {
        let m = Arc::new(generate_mesh(&Geometry::unit_disk(), 0.2).unwrap());
        let area = m.total_area();
        let c = FeField::interpolate(m, |_| -3.0).unwrap();
        assert!((l2_norm(&c) - 3.0 * area.sqrt()).abs() < 1e-12);
        assert!(h1_seminorm(&c) < 1e-12);
    }

    #[test]
    fn linear_field_on_square() {
        let m = Arc::new(generate_mesh(&Geometry::unit_square(), 0.2).unwrap());
        let x = FeField::interpolate(m.clone(), |p| p.x).unwrap();
        assert!((h1_seminorm(&x) - 1.0).abs() < 1e-12);
        assert!((l2_norm(&x) - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((h1_norm(&x) - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let z = FeField::zeros(m);
        assert_eq!((l2_norm(&z), h1_seminorm(&z), h1_norm(&z)), (0.0, 0.0, 0.0));
    }

    #[test]
    fn exact_error_of_interpolant() {
        let m = Arc::new(generate_mesh(&Geometry::unit_square(), 0.2).unwrap());
        let x = FeField::interpolate(m.clone(), |p| 2.0 * p.x - p.y).unwrap();
        let e = h1_error_exact(&x, |p| 2.0 * p.x - p.y, |_| [2.0, -1.0]);
        assert!(e.h1_error() < 1e-12);
        assert!((e.semi_exact_sq - 5.0).abs() < 1e-12);
    }

    #[test]
    fn relative_errors() {
        let m = Arc::new(generate_mesh(&Geometry::unit_disk(), 0.3).unwrap());
        let a = FeField::interpolate(m.clone(), |p| p.x * p.y + 1.0).unwrap();
        assert_eq!(relative_error(&a, &a, &a, NormKind::H1).unwrap(), 0.0);
        let z = FeField::zeros(m);
        assert!((relative_error(&a, &z, &a, NormKind::H1).unwrap() - 1.0).abs() < 1e-15);
        assert!(relative_error(&a, &z, &z, NormKind::H1).is_err());
    }
}
