//! Quadrature rules on rectangles, triangles and convex polygons.
//!
//! Three families are provided:
//! - tensor Gauss–Legendre on axis-aligned rectangles,
//! - collapsed (Duffy) Gauss–Legendre on triangles,
//! - composite rules on `4^L` congruent subtriangles, used for integrands
//!   carrying a discontinuous weight such as a pulled-back region indicator.

use std::f64::consts::PI;

use crate::error::SpectralError;
use crate::geometry::{ConvexPolygon, Point, Region};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (z * p - p0) / (z * z - 1.0);
    (p, dp)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_interval(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| v * half).collect())
}

/// Degree-5 seven-point rule on the reference triangle, as
/// `(barycentric coordinates, weight fraction of the area)`.
fn seven_point_rule() -> [([f64; 3], f64); 7] {
    let r15 = 15f64.sqrt();
    let a = (6.0 - r15) / 21.0;
    let b = (6.0 + r15) / 21.0;
    let wa = (155.0 - r15) / 1200.0;
    let wb = (155.0 + r15) / 1200.0;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 9.0 / 40.0),
        ([a, a, 1.0 - 2.0 * a], wa),
        ([a, 1.0 - 2.0 * a, a], wa),
        ([1.0 - 2.0 * a, a, a], wa),
        ([b, b, 1.0 - 2.0 * b], wb),
        ([b, 1.0 - 2.0 * b, b], wb),
        ([1.0 - 2.0 * b, b, b], wb),
    ]
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<Point>,
    weights: Vec<f64>,
    domain: ConvexPolygon,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn domain(&self) -> &ConvexPolygon {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate<F: Fn(Point) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    /// Tensor Gauss–Legendre rule with `order` nodes per axis on an
    /// axis-aligned rectangle.
    pub fn rectangle(domain: &ConvexPolygon, order: usize) -> Result<Self, SpectralError> {
        check_order(order)?;
        let (lo, hi) = domain.as_axis_rectangle().ok_or(SpectralError::ParentNotRectangle)?;
        let (x1, w1) = gauss_legendre_interval(order, lo.x1, hi.x1);
        let (x2, w2) = gauss_legendre_interval(order, lo.x2, hi.x2);
        let mut nodes = Vec::with_capacity(order * order);
        let mut weights = Vec::with_capacity(order * order);
        for (a, wa) in x1.iter().zip(&w1) {
            for (b, wb) in x2.iter().zip(&w2) {
                nodes.push(Point::new(*a, *b));
                weights.push(wa * wb);
            }
        }
        Ok(Self { nodes, weights, domain: domain.clone() })
    }

    /// Collapsed Gauss rule on a triangle.
    pub fn triangle(domain: &ConvexPolygon, order: usize) -> Result<Self, SpectralError> {
        check_order(order)?;
        let v = domain.vertices();
        if v.len() != 3 {
            return Self::fan(domain, order);
        }
        let (nodes, weights) = duffy_triangle([v[0], v[1], v[2]], order);
        Ok(Self { nodes, weights, domain: domain.clone() })
    }

    /// Rectangles get the tensor rule, everything else a fan of collapsed
    /// triangle rules.
    pub fn polygon(domain: &ConvexPolygon, order: usize) -> Result<Self, SpectralError> {
        if domain.as_axis_rectangle().is_some() {
            Self::rectangle(domain, order)
        } else {
            Self::fan(domain, order)
        }
    }

    fn fan(domain: &ConvexPolygon, order: usize) -> Result<Self, SpectralError> {
        check_order(order)?;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for tri in domain.fan_triangles() {
            let (n, w) = duffy_triangle(tri, order);
            nodes.extend(n);
            weights.extend(w);
        }
        Ok(Self { nodes, weights, domain: domain.clone() })
    }

    /// Composite seven-point rule over `4^level` congruent subtriangles of
    /// each fan triangle of `domain`.
    pub fn composite(domain: &ConvexPolygon, level: u32) -> Self {
        let rule = seven_point_rule();
        let n = 1usize << level;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for [a, b, c] in domain.fan_triangles() {
            let area = 0.5 * (b - a).cross(c - a).abs();
            let cell_area = area / (n * n) as f64;
            let e1 = (b - a) * (1.0 / n as f64);
            let e2 = (c - a) * (1.0 / n as f64);
            let mut push_cell = |p: Point, q: Point, r: Point| {
                for (bary, w) in &rule {
                    nodes.push(p * bary[0] + q * bary[1] + r * bary[2]);
                    weights.push(w * cell_area);
                }
            };
            for i in 0..n {
                for j in 0..n - i {
                    let base = a + e1 * i as f64 + e2 * j as f64;
                    push_cell(base, base + e1, base + e2);
                    if i + j + 1 < n {
                        push_cell(base + e1 + e2, base + e2, base + e1);
                    }
                }
            }
        }
        Self { nodes, weights, domain: domain.clone() }
    }

    /// Concatenated polygon rules over the pieces of a region.
    pub fn region(region: &Region, ambient: &ConvexPolygon, order: usize) -> Result<Self, SpectralError> {
        check_order(order)?;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for poly in region.polygons() {
            let rule = Self::polygon(poly, order)?;
            nodes.extend(rule.nodes);
            weights.extend(rule.weights);
        }
        Ok(Self { nodes, weights, domain: ambient.clone() })
    }

    /// Same nodes, weights multiplied by `weight(node)`. Nodes with zero
    /// weight are dropped.
    pub fn reweighted<F: Fn(Point) -> f64>(&self, weight: F) -> Self {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        let mut weights = Vec::with_capacity(self.nodes.len());
        for (&p, &w) in self.nodes.iter().zip(&self.weights) {
            let m = weight(p);
            if m != 0.0 {
                nodes.push(p);
                weights.push(w * m);
            }
        }
        Self { nodes, weights, domain: self.domain.clone() }
    }
}

fn check_order(order: usize) -> Result<(), SpectralError> {
    if order < 2 {
        Err(SpectralError::QuadratureOrder(order))
    } else {
        Ok(())
    }
}

fn duffy_triangle([a, b, c]: [Point; 3], order: usize) -> (Vec<Point>, Vec<f64>) {
    let (s, ws) = gauss_legendre_interval(order, 0.0, 1.0);
    let jac = (b - a).cross(c - a).abs();
    let mut nodes = Vec::with_capacity(order * order);
    let mut weights = Vec::with_capacity(order * order);
    for (si, wi) in s.iter().zip(&ws) {
        for (tj, wj) in s.iter().zip(&ws) {
            let t = tj * (1.0 - si);
            nodes.push(a + (b - a) * *si + (c - a) * t);
            weights.push(wi * wj * (1.0 - si) * jac);
        }
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{half_equilateral_triangle, sqrt3, sqrt3_rectangle};
    use crate::spectral::rect_eigenfunction;
    use crate::spectral::ModeIndex;

    #[test]
    fn legendre_nodes_small_orders() {
        let (x, w) = gauss_legendre(2);
        assert!((x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15);
        let (x, w) = gauss_legendre(3);
        assert!((x[2] - 0.6f64.sqrt()).abs() < 1e-15);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-15);
        assert_eq!(x[1], 0.0);
    }

    #[test]
    fn legendre_exactness() {
        for n in [5usize, 16, 40, 80] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(t, v)| v * t.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-12, "n={n} deg={deg} {got} {exact}");
            }
        }
    }

    #[test]
    fn rectangle_area_and_sine_integrals() {
        let rect = sqrt3_rectangle();
        let rule = QuadratureRule::rectangle(&rect, 16).unwrap();
        assert!((rule.integrate(|_| 1.0) - sqrt3()).abs() < 1e-12);
        let k11 = ModeIndex::new(1, 1).unwrap();
        let k21 = ModeIndex::new(2, 1).unwrap();
        let sq = rule.integrate(|p| rect_eigenfunction(k11, p).powi(2));
        assert!((sq - sqrt3() / 4.0).abs() < 1e-10, "{sq}");
        let cross = rule.integrate(|p| rect_eigenfunction(k11, p) * rect_eigenfunction(k21, p));
        assert!(cross.abs() < 1e-10);
    }

    #[test]
    fn triangle_area_and_moment() {
        let tri = half_equilateral_triangle();
        let rule = QuadratureRule::triangle(&tri, 8).unwrap();
        let area = 1.0 / (2.0 * sqrt3());
        assert!((rule.integrate(|_| 1.0) - area).abs() < 1e-12);
        // First moment: area × centroid.
        let m1 = rule.integrate(|p| p.x1);
        assert!((m1 - area * (1.0 / sqrt3()) / 3.0).abs() < 1e-10);
        let m2 = rule.integrate(|p| p.x2);
        assert!((m2 - area / 3.0).abs() < 1e-10);
        assert!(rule.weights().iter().all(|&w| w > 0.0));
        assert!(rule.nodes().iter().all(|&p| tri.contains_closed(p, 1e-14)));
    }

    #[test]
    fn triangle_polynomial_exactness() {
        // ∫_T x₁^a x₂^b over the triangle with legs p (x₁) and q (x₂):
        // p^{a+1} q^{b+1} a! b! / (a+b+2)!
        let tri = half_equilateral_triangle();
        let rule = QuadratureRule::triangle(&tri, 6).unwrap();
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        let p = 1.0 / sqrt3();
        for a in 0..6u32 {
            for b in 0..(6 - a) {
                let exact = p.powi(a as i32 + 1) * fact(a) * fact(b) / fact(a + b + 2);
                let got = rule.integrate(|x| x.x1.powi(a as i32) * x.x2.powi(b as i32));
                assert!((got - exact).abs() < 1e-14, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn composite_rule_weights_and_degree() {
        let tri = half_equilateral_triangle();
        for level in 0..4 {
            let rule = QuadratureRule::composite(&tri, level);
            assert_eq!(rule.len(), 7 * 4usize.pow(level));
            assert!((rule.weight_sum() - tri.area()).abs() < 1e-14);
            let exact = QuadratureRule::triangle(&tri, 6).unwrap();
            let f = |p: Point| p.x1.powi(3) * p.x2.powi(2) + p.x2.powi(5);
            assert!((rule.integrate(f) - exact.integrate(f)).abs() < 1e-15);
        }
    }

    #[test]
    fn polygon_rule_on_pentagon() {
        let poly = ConvexPolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.5, 1.0),
            Point::new(1.0, 2.0),
            Point::new(-0.5, 1.0),
        ])
        .unwrap();
        let rule = QuadratureRule::polygon(&poly, 4).unwrap();
        assert!((rule.weight_sum() - poly.area()).abs() < 1e-13);
        let fine = QuadratureRule::composite(&poly, 3);
        assert!((rule.integrate(|p| p.x1 * p.x2) - fine.integrate(|p| p.x1 * p.x2)).abs() < 1e-12);
    }
}
