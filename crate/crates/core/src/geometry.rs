//! Analytic description of a composite: an outer domain with disjoint inclusions.
//!
//! Region `0` is the background, region `m` (1-based) is the `m`-th inclusion.
//! Inclusions are closed sets: a point on an inclusion boundary belongs to the
//! inclusion.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("invalid inclusion region {region} (geometry has {count} inclusions)")]
    InvalidRegion { region: usize, count: usize },
    #[error("inclusions {a} and {b} overlap or touch (separation {separation:e})")]
    Overlap { a: usize, b: usize, separation: f64 },
    #[error("inclusion {region} touches or crosses the outer boundary (clearance {clearance:e})")]
    TouchesBoundary { region: usize, clearance: f64 },
    #[error("delta must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed geometry file: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Region label: `0` is the background, `m >= 1` the `m`-th inclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionId(pub usize);

impl RegionId {
    pub const BACKGROUND: RegionId = RegionId(0);

    pub fn is_background(self) -> bool {
        self.0 == 0
    }

    /// Zero-based index into the inclusion list, `None` for the background.
    pub fn inclusion_index(self) -> Option<usize> {
        self.0.checked_sub(1)
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = (b - a).cross(c - a);
    let o2 = (b - a).cross(d - a);
    let o3 = (d - c).cross(a - c);
    let o4 = (d - c).cross(b - c);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    segment_distance(c, a, b) == 0.0
        || segment_distance(d, a, b) == 0.0
        || segment_distance(a, c, d) == 0.0
        || segment_distance(b, c, d) == 0.0
}

/// A closed planar shape: either an analytic disk or a simple polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Circle { center: Point, radius: f64 },
    Polygon { vertices: Vec<Point> },
}

impl Shape {
    pub fn circle(center: Point, radius: f64) -> Self {
        Shape::Circle { center, radius }
    }

    pub fn polygon(vertices: Vec<Point>) -> Self {
        Shape::Polygon { vertices }
    }

    fn check(&self) -> Result<()> {
        match self {
            Shape::Circle { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite() && center.x.is_finite() && center.y.is_finite()) {
                    return Err(GeometryError::InvalidShape(format!(
                        "circle at {center} with radius {radius}"
                    )));
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(GeometryError::InvalidShape(
                        "polygon needs at least 3 vertices".into(),
                    ));
                }
                if signed_area(vertices).abs() <= 0.0 {
                    return Err(GeometryError::InvalidShape("polygon has zero area".into()));
                }
                let n = vertices.len();
                for i in 0..n {
                    for j in i + 1..n {
                        // adjacent edges share a vertex
                        if j == i + 1 || (i == 0 && j == n - 1) {
                            continue;
                        }
                        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                        let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                        if segments_intersect(a, b, c, d) {
                            return Err(GeometryError::InvalidShape(
                                "polygon is not simple".into(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Closed-set membership.
    pub fn contains(&self, p: Point) -> bool {
        match self {
            Shape::Circle { center, radius } => p.dist(*center) <= *radius,
            Shape::Polygon { vertices } => {
                point_in_polygon(p, vertices) || self.boundary_distance(p) == 0.0
            }
        }
    }

    /// Distance from `p` to the closed shape (zero inside).
    pub fn distance(&self, p: Point) -> f64 {
        match self {
            Shape::Circle { center, radius } => (p.dist(*center) - radius).max(0.0),
            Shape::Polygon { vertices } => {
                if point_in_polygon(p, vertices) {
                    0.0
                } else {
                    self.boundary_distance(p)
                }
            }
        }
    }

    /// Distance from `p` to the boundary curve.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        match self {
            Shape::Circle { center, radius } => (p.dist(*center) - radius).abs(),
            Shape::Polygon { vertices } => polygon_edges(vertices)
                .map(|(a, b)| segment_distance(p, a, b))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Shape::Circle { radius, .. } => 2.0 * radius,
            Shape::Polygon { vertices } => {
                let mut d: f64 = 0.0;
                for (i, a) in vertices.iter().enumerate() {
                    for b in &vertices[i + 1..] {
                        d = d.max(a.dist(*b));
                    }
                }
                d
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Shape::Circle { radius, .. } => std::f64::consts::PI * radius * radius,
            Shape::Polygon { vertices } => signed_area(vertices).abs(),
        }
    }

    /// Inradius-like size used for mesh-size preconditions: the radius for a
    /// circle, the shortest polygon edge otherwise.
    pub fn feature_size(&self) -> f64 {
        match self {
            Shape::Circle { radius, .. } => *radius,
            Shape::Polygon { vertices } => polygon_edges(vertices)
                .map(|(a, b)| a.dist(b))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Counterclockwise polyline approximation with every chord no longer than `h`.
    ///
    /// Circles are replaced by inscribed regular polygons; polygon edges are
    /// subdivided uniformly.
    pub fn discretize(&self, h: f64) -> Vec<Point> {
        match self {
            Shape::Circle { center, radius } => {
                let half = (h / (2.0 * radius)).min(1.0).asin();
                let n = ((std::f64::consts::PI / half).ceil() as usize).max(6);
                (0..n)
                    .map(|k| {
                        let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                        Point::new(center.x + radius * t.cos(), center.y + radius * t.sin())
                    })
                    .collect()
            }
            Shape::Polygon { vertices } => {
                let mut ccw = vertices.clone();
                if signed_area(&ccw) < 0.0 {
                    ccw.reverse();
                }
                let mut out = Vec::new();
                for (a, b) in polygon_edges(&ccw) {
                    let pieces = ((a.dist(b) / h).ceil() as usize).max(1);
                    for k in 0..pieces {
                        let t = k as f64 / pieces as f64;
                        out.push(a + (b - a) * t);
                    }
                }
                out
            }
        }
    }
}

fn polygon_edges(vertices: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    let n = vertices.len();
    (0..n).map(move |i| (vertices[i], vertices[(i + 1) % n]))
}

pub fn signed_area(vertices: &[Point]) -> f64 {
    0.5 * polygon_edges(vertices).map(|(a, b)| a.cross(b)).sum::<f64>()
}

/// Even-odd point-in-polygon test (boundary points are not guaranteed either way).
pub fn point_in_polygon(p: Point, vertices: &[Point]) -> bool {
    let mut inside = false;
    for (a, b) in polygon_edges(vertices) {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Minimum distance between two closed shapes; `<= 0` when they touch or overlap.
fn shape_separation(a: &Shape, b: &Shape) -> f64 {
    match (a, b) {
        (Shape::Circle { center: c1, radius: r1 }, Shape::Circle { center: c2, radius: r2 }) => {
            c1.dist(*c2) - r1 - r2
        }
        (Shape::Circle { center, radius }, poly @ Shape::Polygon { .. })
        | (poly @ Shape::Polygon { .. }, Shape::Circle { center, radius }) => {
            if poly.contains(*center) {
                -radius
            } else {
                poly.boundary_distance(*center) - radius
            }
        }
        (Shape::Polygon { vertices: va }, Shape::Polygon { vertices: vb }) => {
            for (p, q) in polygon_edges(va) {
                for (r, s) in polygon_edges(vb) {
                    if segments_intersect(p, q, r, s) {
                        return 0.0;
                    }
                }
            }
            if point_in_polygon(va[0], vb) || point_in_polygon(vb[0], va) {
                return 0.0;
            }
            let d1 = va.iter().map(|&p| b.boundary_distance(p)).fold(f64::INFINITY, f64::min);
            let d2 = vb.iter().map(|&p| a.boundary_distance(p)).fold(f64::INFINITY, f64::min);
            d1.min(d2)
        }
    }
}

/// Distance from an inclusion to the boundary of the domain, `<= 0` when the
/// inclusion is not strictly inside.
fn shape_clearance(domain: &Shape, inc: &Shape) -> f64 {
    match (domain, inc) {
        (Shape::Circle { center, radius }, Shape::Circle { center: c, radius: r }) => {
            radius - center.dist(*c) - r
        }
        (Shape::Circle { center, radius }, Shape::Polygon { vertices }) => vertices
            .iter()
            .map(|v| radius - v.dist(*center))
            .fold(f64::INFINITY, f64::min),
        (dom @ Shape::Polygon { .. }, Shape::Circle { center, radius }) => {
            if dom.contains(*center) {
                dom.boundary_distance(*center) - radius
            } else {
                -radius
            }
        }
        (dom @ Shape::Polygon { vertices: vd }, inc_poly @ Shape::Polygon { vertices: vi }) => {
            if vi.iter().any(|&v| !point_in_polygon(v, vd)) {
                return 0.0;
            }
            for (p, q) in polygon_edges(vd) {
                for (r, s) in polygon_edges(vi) {
                    if segments_intersect(p, q, r, s) {
                        return 0.0;
                    }
                }
            }
            let d1 = vi.iter().map(|&p| dom.boundary_distance(p)).fold(f64::INFINITY, f64::min);
            let d2 = vd.iter().map(|&p| inc_poly.boundary_distance(p)).fold(f64::INFINITY, f64::min);
            d1.min(d2)
        }
    }
}

/// Outer domain plus an ordered list of inclusions (`inclusions[m - 1]` is region `m`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub domain: Shape,
    #[serde(default)]
    pub inclusions: Vec<Shape>,
}

/// Outcome of [`Geometry::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Smallest pairwise gap between inclusions (`+inf` with fewer than two).
    pub min_separation: f64,
    /// Pair attaining `min_separation` (1-based region ids).
    pub closest_pair: Option<(usize, usize)>,
    /// Smallest gap between an inclusion and the outer boundary (`+inf` with none).
    pub min_clearance: f64,
    pub closest_to_boundary: Option<usize>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.min_separation > 0.0 && self.min_clearance > 0.0
    }
}

impl Geometry {
    pub fn new(domain: Shape, inclusions: Vec<Shape>) -> Self {
        Geometry { domain, inclusions }
    }

    pub fn unit_disk() -> Self {
        Geometry::new(Shape::circle(Point::new(0.0, 0.0), 1.0), Vec::new())
    }

    pub fn unit_square() -> Self {
        Geometry::new(
            Shape::polygon(vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.0, 1.0),
            ]),
            Vec::new(),
        )
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("geometry serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn num_inclusions(&self) -> usize {
        self.inclusions.len()
    }

    /// The shape of inclusion `m` (1-based).
    pub fn inclusion(&self, m: RegionId) -> Result<&Shape> {
        m.inclusion_index()
            .and_then(|i| self.inclusions.get(i))
            .ok_or(GeometryError::InvalidRegion {
                region: m.0,
                count: self.inclusions.len(),
            })
    }

    pub fn in_domain(&self, p: Point) -> bool {
        self.domain.contains(p)
    }

    pub fn diameter(&self) -> f64 {
        self.domain.diameter()
    }

    /// Region containing `p`. Inclusion boundaries resolve to the inclusion.
    pub fn classify_point(&self, p: Point) -> Result<RegionId> {
        if !self.in_domain(p) {
            return Err(GeometryError::OutsideDomain { x: p.x, y: p.y });
        }
        Ok(self
            .inclusions
            .iter()
            .position(|s| s.contains(p))
            .map_or(RegionId::BACKGROUND, |i| RegionId(i + 1)))
    }

    /// Euclidean distance from `p` to the closed inclusion `m`.
    pub fn distance_to_inclusion(&self, m: RegionId, p: Point) -> Result<f64> {
        Ok(self.inclusion(m)?.distance(p))
    }

    /// Distance from `p` to the outer boundary.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        self.domain.boundary_distance(p)
    }

    /// Predicate for the closed inclusion `m` together with all points of the
    /// domain closer than `delta` to it. Other inclusions within reach are
    /// included.
    pub fn delta_neighborhood(&self, m: RegionId, delta: f64) -> Result<DeltaNeighborhood<'_>> {
        if !(delta > 0.0) {
            return Err(GeometryError::NonPositiveDelta(delta));
        }
        let shape = self.inclusion(m)?;
        Ok(DeltaNeighborhood { geom: self, shape, delta })
    }

    /// Predicate for the points of the domain closer than `delta` to its boundary.
    pub fn boundary_strip(&self, delta: f64) -> Result<BoundaryStrip<'_>> {
        if !(delta > 0.0) {
            return Err(GeometryError::NonPositiveDelta(delta));
        }
        Ok(BoundaryStrip { geom: self, delta })
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport {
            min_separation: f64::INFINITY,
            closest_pair: None,
            min_clearance: f64::INFINITY,
            closest_to_boundary: None,
        };
        for (i, a) in self.inclusions.iter().enumerate() {
            let c = shape_clearance(&self.domain, a);
            if c < report.min_clearance {
                report.min_clearance = c;
                report.closest_to_boundary = Some(i + 1);
            }
            for (j, b) in self.inclusions.iter().enumerate().skip(i + 1) {
                let s = shape_separation(a, b);
                if s < report.min_separation {
                    report.min_separation = s;
                    report.closest_pair = Some((i + 1, j + 1));
                }
            }
        }
        report
    }

    /// Validates shapes and layout, turning a failing report into an error.
    pub fn check(&self) -> Result<ValidationReport> {
        self.domain.check()?;
        for s in &self.inclusions {
            s.check()?;
        }
        let report = self.validate();
        if let Some((a, b)) = report.closest_pair {
            if report.min_separation <= 0.0 {
                return Err(GeometryError::Overlap { a, b, separation: report.min_separation });
            }
        }
        if let Some(m) = report.closest_to_boundary {
            if report.min_clearance <= 0.0 {
                return Err(GeometryError::TouchesBoundary { region: m, clearance: report.min_clearance });
            }
        }
        Ok(report)
    }
}

/// A subset of the plane that can be tested pointwise.
pub trait RegionPredicate {
    fn contains(&self, p: Point) -> bool;
}

impl<F: Fn(Point) -> bool> RegionPredicate for F {
    fn contains(&self, p: Point) -> bool {
        self(p)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DeltaNeighborhood<'a> {
    geom: &'a Geometry,
    shape: &'a Shape,
    delta: f64,
}

impl RegionPredicate for DeltaNeighborhood<'_> {
    fn contains(&self, p: Point) -> bool {
        self.geom.in_domain(p) && self.shape.distance(p) < self.delta
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundaryStrip<'a> {
    geom: &'a Geometry,
    delta: f64,
}

impl RegionPredicate for BoundaryStrip<'_> {
    fn contains(&self, p: Point) -> bool {
        self.geom.in_domain(p) && self.geom.distance_to_boundary(p) < self.delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_disks(sep: f64) -> Geometry {
        let r = 0.1;
        Geometry::new(
            Shape::circle(Point::new(0.0, 0.0), 1.0),
            vec![
                Shape::circle(Point::new(-r - sep / 2.0, 0.0), r),
                Shape::circle(Point::new(r + sep / 2.0, 0.0), r),
            ],
        )
    }

    fn ring_of(n: usize, radius: f64, r: f64) -> Geometry {
        let inclusions = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Shape::circle(Point::new(radius * t.cos(), radius * t.sin()), r)
            })
            .collect();
        Geometry::new(Shape::circle(Point::new(0.0, 0.0), 1.0), inclusions)
    }

    #[test]
    fn classify_center_and_background() {
        let g = ring_of(6, 0.5, 0.07);
        let c3 = match &g.inclusions[2] {
            Shape::Circle { center, .. } => *center,
            _ => unreachable!(),
        };
        assert_eq!(g.classify_point(c3).unwrap(), RegionId(3));
        assert_eq!(g.classify_point(Point::new(0.0, 0.0)).unwrap(), RegionId(0));
    }

    #[test]
    fn classify_just_outside_circle_is_background() {
        let g = ring_of(6, 0.5, 0.07);
        let p = Point::new(0.5 + 0.07 + 1e-9, 0.0);
        // exact circle membership predicate
        assert!(p.dist(Point::new(0.5, 0.0)) > 0.07);
        assert_eq!(g.classify_point(p).unwrap(), RegionId(0));
        // boundary point belongs to the inclusion
        assert_eq!(g.classify_point(Point::new(0.57, 0.0)).unwrap(), RegionId(1));
    }

    #[test]
    fn classify_outside_domain_errors() {
        let g = Geometry::unit_disk();
        assert!(matches!(
            g.classify_point(Point::new(2.0, 0.0)),
            Err(GeometryError::OutsideDomain { .. })
        ));
    }

    #[test]
    fn circle_distances() {
        let g = ring_of(1, 0.0, 0.2);
        assert_eq!(g.distance_to_inclusion(RegionId(1), Point::new(0.0, 0.0)).unwrap(), 0.0);
        let d = g.distance_to_inclusion(RegionId(1), Point::new(0.4, 0.0)).unwrap();
        assert!((d - 0.2).abs() < 1e-15);
        assert!(g.distance_to_inclusion(RegionId(0), Point::new(0.4, 0.0)).is_err());
        assert!(g.distance_to_inclusion(RegionId(2), Point::new(0.4, 0.0)).is_err());
    }

    #[test]
    fn polygon_distance_matches_dense_sampling() {
        let tri = vec![Point::new(-0.2, -0.1), Point::new(0.3, -0.1), Point::new(0.0, 0.3)];
        let g = Geometry::new(Shape::circle(Point::new(0.0, 0.0), 1.0), vec![Shape::polygon(tri.clone())]);
        // opposite the midpoint of the bottom edge
        let p = Point::new(0.05, -0.45);
        let d = g.distance_to_inclusion(RegionId(1), p).unwrap();
        // oracle: min over densely sampled boundary points
        let mut best = f64::INFINITY;
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            for k in 0..=20000 {
                let q = a + (b - a) * (k as f64 / 20000.0);
                best = best.min(p.dist(q));
            }
        }
        assert!((d - best).abs() < 1e-6, "{d} vs {best}");
        assert!((d - 0.35).abs() < 1e-12);
    }

    #[test]
    fn delta_neighborhood_examples() {
        let g = two_disks(0.05);
        let nb = g.delta_neighborhood(RegionId(1), 0.1).unwrap();
        assert!(nb.contains(Point::new(-0.15, 0.0)));
        // d = 2 delta away in the background
        assert!(!nb.contains(Point::new(-0.15, 0.1 + 0.2)));
        // inside the other inclusion but within delta of inclusion 1
        let q = Point::new(0.03, 0.0);
        assert_eq!(g.classify_point(q).unwrap(), RegionId(2));
        assert!(nb.contains(q));
        assert!(g.delta_neighborhood(RegionId(1), 0.0).is_err());
    }

    #[test]
    fn boundary_strip_examples() {
        let g = Geometry::unit_disk();
        let s = g.boundary_strip(0.1).unwrap();
        assert!(s.contains(Point::new(0.95, 0.0)));
        assert!(!s.contains(Point::new(0.0, 0.0)));
        let all = g.boundary_strip(2.0).unwrap();
        for k in 0..50 {
            let t = k as f64 * 0.37;
            let r = 0.99 * (k as f64 / 50.0);
            assert!(all.contains(Point::new(r * t.cos(), r * t.sin())));
        }
    }

    #[test]
    fn validate_examples() {
        let g = two_disks(0.1);
        let rep = g.check().unwrap();
        assert!((rep.min_separation - 0.1).abs() < 1e-12);
        let bad = two_disks(-0.01);
        assert!(!bad.validate().passed());
        assert!(matches!(bad.check(), Err(GeometryError::Overlap { a: 1, b: 2, .. })));
        let touching = Geometry::new(
            Shape::circle(Point::new(0.0, 0.0), 1.0),
            vec![Shape::circle(Point::new(0.9, 0.0), 0.1)],
        );
        assert!(matches!(touching.check(), Err(GeometryError::TouchesBoundary { region: 1, .. })));
    }

    #[test]
    fn validate_ring_layout_against_brute_force() {
        let g = ring_of(17, 0.75, 0.07);
        let rep = g.check().unwrap();
        let mut brute = f64::INFINITY;
        let centers: Vec<Point> = g
            .inclusions
            .iter()
            .map(|s| match s {
                Shape::Circle { center, .. } => *center,
                _ => unreachable!(),
            })
            .collect();
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                brute = brute.min(centers[i].dist(centers[j]) - 0.14);
            }
        }
        assert!((rep.min_separation - brute).abs() < 1e-12);
        assert!((rep.min_clearance - 0.18).abs() < 1e-12);
    }

    #[test]
    fn polygon_shapes_validate() {
        let sq = Geometry::new(
            Shape::polygon(vec![
                Point::new(0.0, 0.0),
                Point::new(2.0, 0.0),
                Point::new(2.0, 2.0),
                Point::new(0.0, 2.0),
            ]),
            vec![
                Shape::polygon(vec![Point::new(0.5, 0.5), Point::new(0.8, 0.5), Point::new(0.6, 0.9)]),
                Shape::circle(Point::new(1.5, 1.5), 0.2),
            ],
        );
        let rep = sq.check().unwrap();
        assert!(rep.passed());
        assert!((rep.min_clearance - 0.3).abs() < 1e-12);
        let bow = Shape::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ]);
        assert!(bow.check().is_err());
    }

    #[test]
    fn json_format() {
        let s = r#"{"domain": {"circle": {"center":[0,0],"radius":1}},
                    "inclusions": [{"circle": {"center":[0.3,0.1],"radius":0.07}}]}"#;
        let g = Geometry::from_json_str(s).unwrap();
        assert_eq!(g.num_inclusions(), 1);
        assert_eq!(g.inclusions[0], Shape::circle(Point::new(0.3, 0.1), 0.07));
        let back = Geometry::from_json_str(&g.to_json_string()).unwrap();
        assert_eq!(back, g);
        assert!(Geometry::from_json_str(r#"{"domain": {"circle": {"center":[0,0],"radius":1}}, "extra": 1}"#).is_err());
    }

    #[test]
    fn discretize_chords() {
        let c = Shape::circle(Point::new(0.1, 0.2), 0.07);
        let pts = c.discretize(0.02);
        assert!(pts.len() >= 20);
        for i in 0..pts.len() {
            let d = pts[i].dist(pts[(i + 1) % pts.len()]);
            assert!(d <= 0.02 + 1e-15);
        }
        assert!(signed_area(&pts) > 0.0);
        let cw = Shape::polygon(vec![Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 0.0)]);
        let pts = cw.discretize(0.3);
        assert!(signed_area(&pts) > 0.0);
        assert_eq!(pts.len(), 4 + 4 + 5);
    }

    proptest! {
        #[test]
        fn classify_consistent_with_distance(x in -0.99f64..0.99, y in -0.99f64..0.99) {
            let g = ring_of(8, 0.5, 0.12);
            let p = Point::new(x, y);
            prop_assume!(g.in_domain(p));
            let region = g.classify_point(p).unwrap();
            for m in 1..=8 {
                let d = g.distance_to_inclusion(RegionId(m), p).unwrap();
                prop_assert_eq!(region == RegionId(m), d == 0.0);
            }
        }

        #[test]
        fn delta_neighborhood_monotone(x in -0.99f64..0.99, y in -0.99f64..0.99,
                                       d1 in 0.001f64..0.5, d2 in 0.001f64..0.5) {
            let g = ring_of(8, 0.5, 0.12);
            let p = Point::new(x, y);
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            for m in 1..=8 {
                let a = g.delta_neighborhood(RegionId(m), lo).unwrap().contains(p);
                let b = g.delta_neighborhood(RegionId(m), hi).unwrap().contains(p);
                prop_assert!(!a || b);
            }
        }

        #[test]
        fn small_delta_excludes_far_inclusions(x in -0.99f64..0.99, y in -0.99f64..0.99, frac in 0.01f64..0.99) {
            let g = ring_of(8, 0.5, 0.12);
            let rep = g.check().unwrap();
            let delta = frac * rep.min_separation;
            let p = Point::new(x, y);
            prop_assume!(g.in_domain(p));
            let region = g.classify_point(p).unwrap();
            for m in 1..=8 {
                let d = g.distance_to_inclusion(RegionId(m), p).unwrap();
                if region.0 != 0 && region.0 != m && d > delta {
                    prop_assert!(!g.delta_neighborhood(RegionId(m), delta).unwrap().contains(p));
                }
            }
        }
    }
}
