//! Quadrature rules on triangles in barycentric form.

#![allow(clippy::excessive_precision)]

/// Barycentric point and weight (weights sum to 1; multiply by the area).
pub type QuadPoint = ([f64; 3], f64);

/// Seven-point rule exact for polynomials of degree 5.
pub const DEGREE5: [QuadPoint; 7] = {
    const A1: f64 = 0.059_715_871_789_769_82;
    const B1: f64 = 0.470_142_064_105_115_09;
    const W1: f64 = 0.132_394_152_788_506_18;
    const A2: f64 = 0.797_426_985_353_087_3;
    const B2: f64 = 0.101_286_507_323_456_34;
    const W2: f64 = 0.125_939_180_544_827_15;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

#[cfg(test)]
mod tests {
    use super::*;

    /// int over the reference triangle of x^a y^b = a! b! / (a + b + 2)!
    fn exact(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn exact_through_degree_five() {
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                let q: f64 = DEGREE5
                    .iter()
                    .map(|(l, w)| 0.5 * w * l[1].powi(a as i32) * l[2].powi(b as i32))
                    .sum();
                assert!((q - exact(a, b)).abs() < 1e-15, "x^{a} y^{b}: {q} vs {}", exact(a, b));
            }
        }
    }
}
