//! Planar primitives: points, rigid motions, convex polygons and finite unions
//! of convex polygons, plus the half-equilateral triangle, the √3 rectangle and
//! the six motions tiling one with the other.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix2, Vector2};

use crate::error::GeometryError;

/// Tolerance on `AᵀA = I` accepted for the linear part of a rigid motion.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

/// Default tolerance for boundary classification, in domain units.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x1: f64,
    pub x2: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x1 - other.x1).hypot(self.x2 - other.x2)
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    /// z-component of the cross product `self × other`.
    pub fn cross(self, other: Point) -> f64 {
        self.x1 * other.x2 - self.x2 * other.x1
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    /// `λ·a + (1−λ)·b`
    pub fn lerp(lambda: f64, a: Point, b: Point) -> Point {
        a * lambda + b * (1.0 - lambda)
    }

    fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.x1, self.x2)
    }

    fn from_vector(v: Vector2<f64>) -> Self {
        Self::new(v[0], v[1])
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x1 * rhs, self.x2 * rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x1, -self.x2)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

/// An isometry `x ↦ linear·x + shift` of the plane.
///
/// Reflections are carried inside `linear` (determinant −1), so composition and
/// inversion treat rotations and reflections uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion {
    linear: Matrix2<f64>,
    shift: Point,
}

impl RigidMotion {
    pub fn new(linear: Matrix2<f64>, shift: Point) -> Result<Self, GeometryError> {
        if !linear.iter().all(|v| v.is_finite()) || !shift.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let defect = (linear.transpose() * linear - Matrix2::identity()).abs().max();
        if defect > ORTHOGONALITY_TOL {
            return Err(GeometryError::NotOrthogonal { defect });
        }
        Ok(Self { linear, shift })
    }

    pub fn identity() -> Self {
        Self { linear: Matrix2::identity(), shift: Point::ORIGIN }
    }

    pub fn translation(shift: Point) -> Self {
        Self { linear: Matrix2::identity(), shift }
    }

    pub fn linear(&self) -> &Matrix2<f64> {
        &self.linear
    }

    pub fn shift(&self) -> Point {
        self.shift
    }

    pub fn determinant(&self) -> f64 {
        self.linear.determinant()
    }

    pub fn is_reflection(&self) -> bool {
        self.determinant() < 0.0
    }

    pub fn apply(&self, p: Point) -> Point {
        Point::from_vector(self.linear * p.to_vector()) + self.shift
    }

    /// Inverse motion `y ↦ linearᵀ(y − shift)`.
    pub fn invert(&self) -> Self {
        let lt = self.linear.transpose();
        Self { linear: lt, shift: -Point::from_vector(lt * self.shift.to_vector()) }
    }

    /// `self ∘ inner`
    pub fn compose(&self, inner: &RigidMotion) -> Self {
        Self {
            linear: self.linear * inner.linear,
            shift: self.apply(inner.shift),
        }
    }

    /// Row-major linear entries `[a11, a12, a21, a22]`.
    pub fn linear_row_major(&self) -> [f64; 4] {
        [self.linear[(0, 0)], self.linear[(0, 1)], self.linear[(1, 0)], self.linear[(1, 1)]]
    }
}

/// Counter-clockwise rotation by `angle`.
pub fn rotation(angle: f64) -> Matrix2<f64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Reflection across the x₁ axis, `diag(1, −1)`.
pub fn sigma_z() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, -1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Boundary,
    Outside,
}

/// A strictly convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if !vertices.iter().all(|p| p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let n = vertices.len();
        let scale = vertices
            .iter()
            .flat_map(|p| [p.x1.abs(), p.x2.abs()])
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let turn = (b - a).cross(c - b);
            if turn <= 1e-14 * scale * scale {
                return Err(GeometryError::NotStrictlyConvex { vertex: (i + 1) % n });
            }
        }
        // Locally convex turns can still wind around more than once.
        let winding: f64 = (0..n)
            .map(|i| {
                let e0 = vertices[(i + 1) % n] - vertices[i];
                let e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
                e0.cross(e1).atan2(e0.dot(e1))
            })
            .sum();
        if (winding - 2.0 * PI).abs() > 1e-6 {
            return Err(GeometryError::NotStrictlyConvex { vertex: 0 });
        }
        Ok(Self { vertices })
    }

    /// Accepts either orientation and stores the vertices counter-clockwise.
    pub fn new_any_orientation(mut vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Self::new(vertices)
    }

    pub fn triangle(a: Point, b: Point, c: Point) -> Result<Self, GeometryError> {
        Self::new_any_orientation(vec![a, b, c])
    }

    /// Axis-aligned rectangle `[min.x1, max.x1] × [min.x2, max.x2]`.
    pub fn rectangle(min: Point, max: Point) -> Result<Self, GeometryError> {
        Self::new(vec![min, Point::new(max.x1, min.x2), max, Point::new(min.x1, max.x2)])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let s = self.vertices.iter().fold(Point::ORIGIN, |acc, &p| acc + p);
        s * (1.0 / n)
    }

    /// `(min, max)` corners of the bounding box.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo = Point::new(lo.x1.min(p.x1), lo.x2.min(p.x2));
            hi = Point::new(hi.x1.max(p.x1), hi.x2.max(p.x2));
        }
        (lo, hi)
    }

    /// Corners when the polygon is an axis-aligned rectangle.
    pub fn as_axis_rectangle(&self) -> Option<(Point, Point)> {
        if self.vertices.len() != 4 {
            return None;
        }
        let axis = self.edges().all(|(a, b)| a.x1 == b.x1 || a.x2 == b.x2);
        axis.then(|| self.bounding_box())
    }

    /// Smallest signed distance to the edge lines; positive inside.
    pub fn min_signed_distance(&self, p: Point) -> f64 {
        self.edges()
            .map(|(a, b)| {
                let e = b - a;
                e.cross(p - a) / e.norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: Point, tol: f64) -> Containment {
        let d = self.min_signed_distance(p);
        if d.abs() <= tol {
            Containment::Boundary
        } else if d > 0.0 {
            Containment::Inside
        } else {
            Containment::Outside
        }
    }

    /// Closed-set membership with slack `tol`.
    pub fn contains_closed(&self, p: Point, tol: f64) -> bool {
        self.min_signed_distance(p) >= -tol
    }

    /// `n_per_edge` uniform samples `λ·vᵢ + (1−λ)·vᵢ₊₁` on each edge, every vertex
    /// emitted once (as the start of its outgoing edge).
    pub fn boundary_samples(&self, n_per_edge: usize) -> Result<Vec<Point>, GeometryError> {
        if n_per_edge < 2 {
            return Err(GeometryError::TooFewEdgeSamples(n_per_edge));
        }
        let steps = (n_per_edge - 1) as f64;
        let mut out = Vec::with_capacity(self.vertices.len() * (n_per_edge - 1));
        for (a, b) in self.edges() {
            for j in 0..n_per_edge - 1 {
                let lambda = 1.0 - j as f64 / steps;
                out.push(Point::lerp(lambda, a, b));
            }
        }
        Ok(out)
    }

    /// Image under a rigid motion, re-oriented counter-clockwise.
    pub fn image(&self, m: &RigidMotion) -> ConvexPolygon {
        let mut vertices: Vec<Point> = self.vertices.iter().map(|&p| m.apply(p)).collect();
        if m.is_reflection() {
            vertices.reverse();
        }
        ConvexPolygon { vertices }
    }

    /// Fan triangulation from the first vertex.
    pub fn fan_triangles(&self) -> Vec<[Point; 3]> {
        let v0 = self.vertices[0];
        self.vertices[1..].windows(2).map(|w| [v0, w[0], w[1]]).collect()
    }
}

fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n).map(|i| vertices[i].cross(vertices[(i + 1) % n])).sum::<f64>()
}

/// Finite union of convex polygons with pairwise disjoint interiors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Region {
    polygons: Vec<ConvexPolygon>,
}

impl Region {
    /// Slack used by [`Region::contains`] so that points mapped onto a polygon
    /// edge by a rigid motion are not lost to rounding.
    pub const MEMBERSHIP_SLACK: f64 = 1e-12;

    pub fn new(polygons: Vec<ConvexPolygon>) -> Self {
        Self { polygons }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(polygon: ConvexPolygon) -> Self {
        Self { polygons: vec![polygon] }
    }

    pub fn polygons(&self) -> &[ConvexPolygon] {
        &self.polygons
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.polygons.iter().map(ConvexPolygon::area).sum()
    }

    /// Closed membership in any of the polygons.
    pub fn contains(&self, p: Point) -> bool {
        self.polygons.iter().any(|poly| poly.contains_closed(p, Self::MEMBERSHIP_SLACK))
    }
}

pub fn sqrt3() -> f64 {
    3f64.sqrt()
}

/// Vertices `v₀ = (0,0)`, `v₁ = (1/√3, 0)`, `v₂ = (0,1)` of the half-equilateral
/// (30-60-90) triangle.
pub fn half_equilateral_vertices() -> [Point; 3] {
    [Point::ORIGIN, Point::new(1.0 / sqrt3(), 0.0), Point::new(0.0, 1.0)]
}

pub fn half_equilateral_triangle() -> ConvexPolygon {
    let [v0, v1, v2] = half_equilateral_vertices();
    ConvexPolygon::new(vec![v0, v1, v2]).expect("reference triangle is convex")
}

/// The rectangle `(0, √3) × (0, 1)`.
pub fn sqrt3_rectangle() -> ConvexPolygon {
    ConvexPolygon::rectangle(Point::ORIGIN, Point::new(sqrt3(), 1.0)).expect("reference rectangle")
}

/// The six motions tiling the √3 rectangle with the half-equilateral triangle.
pub fn half_equilateral_motions() -> [RigidMotion; 6] {
    let [_, v1, v2] = half_equilateral_vertices();
    motions_from_vertices(v1, v2)
}

/// The six maps built from a given pair `(v₁, v₂)`:
///
/// ```text
/// K₁ = id                         K₄: x ↦ −R(x − v₂) + 3v₁
/// K₂: x ↦ −Rσ(x − v₂) + v₂        K₅: x ↦  Rσ(x − v₂) + 3v₁
/// K₃: x ↦  R(x − v₂) + v₂         K₆: x ↦ −x + 3v₁ + v₂
/// ```
///
/// with `R` the counter-clockwise rotation by π/3 and `σ = diag(1, −1)`.
/// `K₄ = K₆∘K₃` and `K₅ = K₆∘K₂`; `K₂` and `K₅` are reflections.
pub fn motions_from_vertices(v1: Point, v2: Point) -> [RigidMotion; 6] {
    let r = rotation(PI / 3.0);
    let rs = r * sigma_z();
    let about_v2 = |linear: Matrix2<f64>, base: Point| {
        let shift = base - Point::from_vector(linear * v2.to_vector());
        RigidMotion::new(linear, shift).expect("orthogonal by construction")
    };
    [
        RigidMotion::identity(),
        about_v2(-rs, v2),
        about_v2(r, v2),
        about_v2(-r, v1 * 3.0),
        about_v2(rs, v1 * 3.0),
        RigidMotion::new(-Matrix2::identity(), v1 * 3.0 + v2).expect("point reflection"),
    ]
}
