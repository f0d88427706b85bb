use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::{FemError, Result};
use crate::geometry::Point;
use crate::mesh::{Mesh, SubMesh};

/// A continuous piecewise-linear function given by its vertex values.
#[derive(Debug, Clone)]
pub struct FeField {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl PartialEq for FeField {
    fn eq(&self, other: &Self) -> bool {
        self.same_mesh(other) && self.values == other.values
    }
}

impl FeField {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(FemError::LengthMismatch { len: values.len(), expected: mesh.num_vertices() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FemError::NonFinite(format!("field value at vertex {i}")));
        }
        Ok(FeField { mesh, values })
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.num_vertices();
        FeField { mesh, values: vec![0.0; n] }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: Arc<Mesh>, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values = mesh.vertices().iter().map(|&p| f(p)).collect();
        Self::new(mesh, values)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_mesh(&self, other: &FeField) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh
    }

    fn check_same(&self, other: &FeField) -> Result<()> {
        if self.same_mesh(other) {
            Ok(())
        } else {
            Err(FemError::MeshMismatch)
        }
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &FeField) -> Result<FeField> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + alpha * b).collect();
        FeField::new(self.mesh.clone(), values)
    }

    pub fn sub(&self, other: &FeField) -> Result<FeField> {
        self.add_scaled(-1.0, other)
    }

    pub fn scaled(&self, s: f64) -> FeField {
        FeField { mesh: self.mesh.clone(), values: self.values.iter().map(|v| v * s).collect() }
    }

    /// `sum_k coeffs[k] * fields[k]` on the mesh of `fields[0]`.
    pub fn linear_combination(coeffs: &[f64], fields: &[&FeField]) -> Result<FeField> {
        assert_eq!(coeffs.len(), fields.len());
        let first = fields.first().ok_or_else(|| FemError::Config("empty linear combination".into()))?;
        let mut values = vec![0.0; first.values.len()];
        for (c, f) in coeffs.iter().zip(fields) {
            first.check_same(f)?;
            for (v, x) in values.iter_mut().zip(&f.values) {
                *v += c * x;
            }
        }
        FeField::new(first.mesh.clone(), values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &FeField) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// The field restricted to a submesh of its mesh.
    pub fn restrict(&self, sub: &SubMesh, sub_mesh: Arc<Mesh>) -> Result<FeField> {
        FeField::new(sub_mesh, sub.restrict(&self.values))
    }

    /// CSV dump: `vertex,x,y,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("vertex,x,y,value\n");
        for (i, (p, v)) in self.mesh.vertices().iter().zip(&self.values).enumerate() {
            let _ = writeln!(s, "{i},{},{},{}", fmt_sig(p.x), fmt_sig(p.y), fmt_sig(*v));
        }
        s
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

/// Formats with 12 significant digits, the precision of every CSV output.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{v:.11e}");
        let (mant, e) = s.split_once('e').unwrap_or((&s, "0"));
        let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        format!("{mant}e{e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tests::unit_square_pair;

    #[test]
    fn arithmetic() {
        let m = Arc::new(unit_square_pair());
        let a = FeField::interpolate(m.clone(), |p| p.x).unwrap();
        let b = FeField::interpolate(m.clone(), |p| p.y).unwrap();
        let c = FeField::linear_combination(&[2.0, -1.0], &[&a, &b]).unwrap();
        for (p, v) in m.vertices().iter().zip(c.values()) {
            assert_eq!(*v, 2.0 * p.x - p.y);
        }
        assert_eq!(a.sub(&a).unwrap().max_abs(), 0.0);
        assert!(FeField::new(m.clone(), vec![0.0; 2]).is_err());
        assert!(FeField::new(m, vec![f64::NAN; 4]).is_err());
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(0.1), "0.1");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(123456.789), "123456.789");
        assert_eq!(fmt_sig(2.0), "2");
        assert_eq!(fmt_sig(-1.5e-9), "-1.5e-9");
        assert_eq!(fmt_sig(6.02214076e23), "6.02214076e23");
        assert_eq!(fmt_sig(0.0446131234567891), "0.0446131234568");
    }

    #[test]
    fn csv_dump() {
        let m = Arc::new(unit_square_pair());
        let f = FeField::interpolate(m, |p| p.x + 1.0).unwrap();
        let csv = f.to_csv();
        assert!(csv.starts_with("vertex,x,y,value\n0,0,0,1\n"));
        assert_eq!(csv.lines().count(), 5);
    }
}
