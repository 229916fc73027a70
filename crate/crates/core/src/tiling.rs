//! Tilings by rigid motions, sign vectors, folding and prolongation of
//! point-evaluable functions, admissibility checks and observation-region
//! pullbacks.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::TilingError;
use crate::geometry::{
    self, Containment, ConvexPolygon, Point, Region, RigidMotion, DEFAULT_BOUNDARY_TOL,
};
use crate::spectral::EigenBasis;

/// Default radius used to cluster coincident boundary images.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-9;

/// Default number of boundary samples per tile edge.
pub const DEFAULT_EDGE_SAMPLES: usize = 64;

/// A choice of ±1 per motion.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new<I, T>(entries: I) -> Result<Self, TilingError>
    where
        I: IntoIterator<Item = T>,
        T: Into<i64>,
    {
        entries
            .into_iter()
            .map(|v| match v.into() {
                1 => Ok(1),
                -1 => Ok(-1),
                other => Err(TilingError::InvalidSign(other)),
            })
            .collect::<Result<Vec<i8>, _>>()
            .map(Self)
    }

    /// δ = (1, −1, 1, 1, −1, 1) for the half-equilateral tiling.
    pub fn half_equilateral() -> Self {
        Self(vec![1, -1, 1, 1, -1, 1])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, h: usize) -> f64 {
        f64::from(self.0[h])
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }

    /// Sign vector whose entry `h` is −1 exactly when bit `h` of `mask` is set.
    fn from_mask(mask: u32, n: usize) -> Self {
        Self((0..n).map(|h| if mask >> h & 1 == 1 { -1 } else { 1 }).collect())
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A tile `Ω`, a target `Ω′` and the motions `K_h` with `cl Ω′ = ⋃ K_h(cl Ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tiling {
    tile: ConvexPolygon,
    target: ConvexPolygon,
    motions: Vec<RigidMotion>,
    images: Vec<ConvexPolygon>,
    signs: Option<SignVector>,
}

impl Tiling {
    pub fn new(
        tile: ConvexPolygon,
        target: ConvexPolygon,
        motions: Vec<RigidMotion>,
    ) -> Result<Self, TilingError> {
        if motions.is_empty() {
            return Err(TilingError::NoMotions);
        }
        let images = motions.iter().map(|m| tile.image(m)).collect();
        Ok(Self { tile, target, motions, images, signs: None })
    }

    pub fn with_signs(mut self, signs: SignVector) -> Result<Self, TilingError> {
        self.check_signs(&signs)?;
        self.signs = Some(signs);
        Ok(self)
    }

    /// The half-equilateral triangle tiling the `(0,√3)×(0,1)` rectangle with
    /// δ = (1,−1,1,1,−1,1).
    pub fn half_equilateral() -> Self {
        Self::new(
            geometry::half_equilateral_triangle(),
            geometry::sqrt3_rectangle(),
            geometry::half_equilateral_motions().to_vec(),
        )
        .and_then(|t| t.with_signs(SignVector::half_equilateral()))
        .expect("reference tiling")
    }

    /// `(0,π)²` tiling `(0,2π)²` by the identity, two mirror reflections and
    /// the point reflection through `(π,π)`, with δ = (1,−1,−1,1).
    pub fn doubled_square() -> Self {
        use std::f64::consts::PI;
        let two_pi = 2.0 * PI;
        let mirror = |a: f64, d: f64, shift: Point| {
            RigidMotion::new(nalgebra::Matrix2::new(a, 0.0, 0.0, d), shift).expect("diagonal ±1")
        };
        let motions = vec![
            RigidMotion::identity(),
            mirror(-1.0, 1.0, Point::new(two_pi, 0.0)),
            mirror(1.0, -1.0, Point::new(0.0, two_pi)),
            mirror(-1.0, -1.0, Point::new(two_pi, two_pi)),
        ];
        Self::new(
            ConvexPolygon::rectangle(Point::ORIGIN, Point::new(PI, PI)).expect("square"),
            ConvexPolygon::rectangle(Point::ORIGIN, Point::new(two_pi, two_pi)).expect("square"),
            motions,
        )
        .and_then(|t| t.with_signs(SignVector::new([1, -1, -1, 1]).expect("signs")))
        .expect("square tiling")
    }

    /// The half-equilateral triangle tiling `(0,1/√3)×(0,1)` by the identity and
    /// the point reflection `x ↦ −x + (1/√3, 1)`. This tiling is not admissible.
    pub fn split_rectangle() -> Self {
        let w = 1.0 / geometry::sqrt3();
        let flip = RigidMotion::new(-nalgebra::Matrix2::identity(), Point::new(w, 1.0))
            .expect("point reflection");
        Self::new(
            geometry::half_equilateral_triangle(),
            ConvexPolygon::rectangle(Point::ORIGIN, Point::new(w, 1.0)).expect("rectangle"),
            vec![RigidMotion::identity(), flip],
        )
        .expect("split rectangle")
    }

    pub fn tile(&self) -> &ConvexPolygon {
        &self.tile
    }

    pub fn target(&self) -> &ConvexPolygon {
        &self.target
    }

    pub fn motions(&self) -> &[RigidMotion] {
        &self.motions
    }

    /// `K_h(Ω)` for every motion, counter-clockwise.
    pub fn images(&self) -> &[ConvexPolygon] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.motions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motions.is_empty()
    }

    pub fn signs(&self) -> Option<&SignVector> {
        self.signs.as_ref()
    }

    pub fn require_signs(&self) -> Result<&SignVector, TilingError> {
        self.signs.as_ref().ok_or(TilingError::MissingSigns)
    }

    fn check_signs(&self, signs: &SignVector) -> Result<(), TilingError> {
        if signs.len() != self.len() {
            return Err(TilingError::SignLength { expected: self.len(), got: signs.len() });
        }
        Ok(())
    }

    /// Lowest `h` whose closed image contains `y` (within `tol`).
    pub fn locate(&self, y: Point, tol: f64) -> Option<usize> {
        self.images.iter().position(|img| img.contains(y, tol) != Containment::Outside)
    }

    /// Monte Carlo check of the tiling property over the interior of `Ω′`.
    ///
    /// Each sample must lie in at least one closed image, and in at most one
    /// open image once points within `tol` of an image boundary are excluded.
    /// The image areas must also add up to the target area.
    pub fn validate(&self, n_samples: usize, tol: f64, seed: u64) -> Result<TilingReport, TilingError> {
        if n_samples < 1000 {
            return Err(TilingError::TooFewSamples(n_samples));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sampler = TriangleSampler::new(&self.target);
        let mut covered = 0usize;
        let mut max_overlap = 0usize;
        let mut uncovered = Vec::new();
        let mut overlapping = Vec::new();
        for _ in 0..n_samples {
            let y = sampler.sample(&mut rng);
            let mut interior = 0usize;
            let mut boundary = 0usize;
            for img in &self.images {
                match img.contains(y, tol) {
                    Containment::Inside => interior += 1,
                    Containment::Boundary => boundary += 1,
                    Containment::Outside => {}
                }
            }
            if interior + boundary > 0 {
                covered += 1;
            } else if uncovered.len() < MAX_REPORTED {
                uncovered.push(y);
            }
            if interior > 1 && overlapping.len() < MAX_REPORTED {
                overlapping.push(y);
            }
            max_overlap = max_overlap.max(interior);
        }
        let image_area: f64 = self.images.iter().map(ConvexPolygon::area).sum();
        let area_defect = (image_area - self.target.area()).abs() / self.target.area();
        let coverage_fraction = covered as f64 / n_samples as f64;
        let pass = covered == n_samples && max_overlap <= 1 && area_defect < 1e-9;
        Ok(TilingReport {
            n_samples,
            coverage_fraction,
            max_overlap_count: max_overlap,
            area_defect,
            uncovered,
            overlapping,
            pass,
        })
    }

    /// `𝓟_δ u(K_h x) = δ_h u(x)`.
    pub fn prolong<'a, U: PointFunction + ?Sized>(
        &'a self,
        u: &'a U,
        signs: &SignVector,
    ) -> Result<Prolongation<'a, U>, TilingError> {
        self.check_signs(signs)?;
        Ok(Prolongation {
            u,
            tiling: self,
            signs: signs.clone(),
            inverses: self.motions.iter().map(RigidMotion::invert).collect(),
            tol: DEFAULT_BOUNDARY_TOL,
        })
    }

    /// `𝓕_δ ū(x) = N⁻² Σ_h δ_h ū(K_h x)`.
    pub fn fold<'a, U: PointFunction + ?Sized>(
        &'a self,
        u: &'a U,
        signs: &SignVector,
    ) -> Result<Folding<'a, U>, TilingError> {
        self.check_signs(signs)?;
        Ok(Folding { u, tiling: self, signs: signs.clone(), tol: DEFAULT_BOUNDARY_TOL })
    }

    /// Structural admissibility: for every boundary sample `x` of `Ω`, the
    /// images `K_h x` grouped by coincidence either lie on `∂Ω′` or carry signs
    /// summing to zero.
    pub fn boundary_cancellation(
        &self,
        signs: &SignVector,
        n_per_edge: usize,
        tol: f64,
    ) -> Result<CancellationReport, TilingError> {
        self.check_signs(signs)?;
        let samples = self.tile.boundary_samples(n_per_edge)?;
        let mut failures = Vec::new();
        for &x in &samples {
            for cluster in self.clusters(x, tol) {
                let on_boundary =
                    self.target.contains(cluster.point, tol) == Containment::Boundary;
                let sum: i32 = cluster.members.iter().map(|&h| i32::from(signs.entries()[h])).sum();
                if !on_boundary && sum != 0 {
                    failures.push(CancellationFailure { sample: x, image: cluster.point, members: cluster.members });
                }
            }
        }
        Ok(CancellationReport { samples_checked: samples.len(), failures })
    }

    pub fn boundary_cancellation_check(
        &self,
        signs: &SignVector,
        n_per_edge: usize,
        tol: f64,
    ) -> Result<bool, TilingError> {
        Ok(self.boundary_cancellation(signs, n_per_edge, tol)?.passed())
    }

    fn clusters(&self, x: Point, tol: f64) -> Vec<Cluster> {
        let mut clusters: Vec<Cluster> = Vec::new();
        for (h, m) in self.motions.iter().enumerate() {
            let y = m.apply(x);
            match clusters.iter_mut().find(|c| c.point.dist(y) <= tol) {
                Some(c) => c.members.push(h),
                None => clusters.push(Cluster { point: y, members: vec![h] }),
            }
        }
        clusters
    }

    /// Randomized witness for admissibility: random finite combinations `φ` of
    /// the target eigenfunctions must fold to functions vanishing on `∂Ω`,
    /// `max |𝓕_δ φ| < tol · sup |φ|` over the boundary samples.
    pub fn functional_admissibility_check(
        &self,
        signs: &SignVector,
        target_modes: &EigenBasis,
        n_test_functions: usize,
        tol: f64,
        seed: u64,
    ) -> Result<bool, TilingError> {
        self.check_signs(signs)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let boundary = self.tile.boundary_samples(DEFAULT_EDGE_SAMPLES)?;
        let probe = probe_points(&self.target, 48);
        let m = target_modes.len();
        let mut values = vec![0.0; m];
        let mut phi = |coeffs: &[f64], p: Point| {
            target_modes.eval_all(p, &mut values);
            values.iter().zip(coeffs).map(|(v, c)| v * c).sum::<f64>()
        };
        let n2 = (self.len() * self.len()) as f64;
        for _ in 0..n_test_functions {
            let coeffs: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sup = probe.iter().map(|&p| phi(&coeffs, p).abs()).fold(0.0, f64::max);
            if sup == 0.0 {
                continue;
            }
            for &x in &boundary {
                let folded: f64 = self
                    .motions
                    .iter()
                    .enumerate()
                    .map(|(h, k)| signs.get(h) * phi(&coeffs, k.apply(x)))
                    .sum::<f64>()
                    / n2;
                if folded.abs() >= tol * sup {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Every δ passing the structural check, in mask order (entry `h` is −1
    /// when bit `h` is set). δ and −δ always appear together.
    pub fn find_admissible_signs(&self, n_per_edge: usize, tol: f64) -> Result<Vec<SignVector>, TilingError> {
        let n = self.len();
        if n > 20 {
            return Err(TilingError::TooManyMotions(n));
        }
        let mut found = Vec::new();
        for mask in 0..(1u32 << n) {
            let signs = SignVector::from_mask(mask, n);
            if self.boundary_cancellation_check(&signs, n_per_edge, tol)? {
                found.push(signs);
            }
        }
        Ok(found)
    }

    /// Membership test for `⋃_h K_h⁻¹(region) ∩ Ω`.
    pub fn pullback(&self, region: Region) -> Pullback<'_> {
        Pullback { tiling: self, region }
    }
}

const MAX_REPORTED: usize = 32;

#[derive(Debug, Clone)]
struct Cluster {
    point: Point,
    members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TilingReport {
    pub n_samples: usize,
    pub coverage_fraction: f64,
    /// Largest number of open images containing a single sample.
    pub max_overlap_count: usize,
    /// `|Σ area(K_h Ω) − area(Ω′)| / area(Ω′)`
    pub area_defect: f64,
    pub uncovered: Vec<Point>,
    pub overlapping: Vec<Point>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CancellationFailure {
    pub sample: Point,
    pub image: Point,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CancellationReport {
    pub samples_checked: usize,
    pub failures: Vec<CancellationFailure>,
}

impl CancellationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// A real function evaluable on a declared closed domain.
pub trait PointFunction: Send + Sync {
    fn domain(&self) -> &ConvexPolygon;

    fn eval(&self, p: Point) -> Result<f64, TilingError>;
}

impl<T: PointFunction + ?Sized> PointFunction for &T {
    fn domain(&self) -> &ConvexPolygon {
        (**self).domain()
    }

    fn eval(&self, p: Point) -> Result<f64, TilingError> {
        (**self).eval(p)
    }
}

/// A closure restricted to a polygon.
pub struct DomainFn<F> {
    domain: ConvexPolygon,
    f: F,
    tol: f64,
}

impl<F: Fn(Point) -> f64 + Send + Sync> DomainFn<F> {
    pub fn new(domain: ConvexPolygon, f: F) -> Self {
        Self { domain, f, tol: DEFAULT_BOUNDARY_TOL }
    }
}

impl<F: Fn(Point) -> f64 + Send + Sync> PointFunction for DomainFn<F> {
    fn domain(&self) -> &ConvexPolygon {
        &self.domain
    }

    fn eval(&self, p: Point) -> Result<f64, TilingError> {
        if !self.domain.contains_closed(p, self.tol) {
            return Err(TilingError::OutsideDomain(p));
        }
        Ok((self.f)(p))
    }
}

/// `𝓟_δ u` on `Ω′`. On shared tile boundaries the lowest motion index wins.
pub struct Prolongation<'a, U: ?Sized> {
    u: &'a U,
    tiling: &'a Tiling,
    signs: SignVector,
    inverses: Vec<RigidMotion>,
    tol: f64,
}

impl<U: PointFunction + ?Sized> PointFunction for Prolongation<'_, U> {
    fn domain(&self) -> &ConvexPolygon {
        self.tiling.target()
    }

    fn eval(&self, y: Point) -> Result<f64, TilingError> {
        let h = self.tiling.locate(y, self.tol).ok_or(TilingError::OutsideDomain(y))?;
        Ok(self.signs.get(h) * self.u.eval(self.inverses[h].apply(y))?)
    }
}

/// `𝓕_δ ū` on `Ω`.
pub struct Folding<'a, U: ?Sized> {
    u: &'a U,
    tiling: &'a Tiling,
    signs: SignVector,
    tol: f64,
}

impl<U: PointFunction + ?Sized> PointFunction for Folding<'_, U> {
    fn domain(&self) -> &ConvexPolygon {
        self.tiling.tile()
    }

    fn eval(&self, x: Point) -> Result<f64, TilingError> {
        if !self.tiling.tile().contains_closed(x, self.tol) {
            return Err(TilingError::OutsideDomain(x));
        }
        let n = self.tiling.len() as f64;
        let mut sum = 0.0;
        for (h, m) in self.tiling.motions().iter().enumerate() {
            sum += self.signs.get(h) * self.u.eval(m.apply(x))?;
        }
        Ok(sum / (n * n))
    }
}

/// `⋃_h K_h⁻¹(region) ∩ Ω`, kept as a membership test.
#[derive(Debug, Clone)]
pub struct Pullback<'a> {
    tiling: &'a Tiling,
    region: Region,
}

impl Pullback<'_> {
    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn tiling(&self) -> &Tiling {
        self.tiling
    }

    /// Indicator of the pullback: some `K_h x` lies in the region.
    pub fn contains(&self, x: Point) -> bool {
        self.in_tile(x) && self.tiling.motions().iter().any(|m| self.region.contains(m.apply(x)))
    }

    /// Number of motions sending `x` into the region. Integrating against this
    /// weight reproduces `Σ_h ∫_{K_h⁻¹(region)∩Ω}`, the tile-side measure of the
    /// region counted once per tile it meets.
    pub fn multiplicity(&self, x: Point) -> usize {
        if !self.in_tile(x) {
            return 0;
        }
        self.tiling.motions().iter().filter(|m| self.region.contains(m.apply(x))).count()
    }

    fn in_tile(&self, x: Point) -> bool {
        self.tiling.tile().contains_closed(x, Region::MEMBERSHIP_SLACK)
    }
}

/// Uniform sampling of a convex polygon through its fan triangles.
pub(crate) struct TriangleSampler {
    triangles: Vec<[Point; 3]>,
    cumulative: Vec<f64>,
}

impl TriangleSampler {
    pub(crate) fn new(poly: &ConvexPolygon) -> Self {
        let triangles = poly.fan_triangles();
        let mut acc = 0.0;
        let cumulative = triangles
            .iter()
            .map(|[a, b, c]| {
                acc += 0.5 * (*b - *a).cross(*c - *a).abs();
                acc
            })
            .collect();
        Self { triangles, cumulative }
    }

    pub(crate) fn sample<R: Rng>(&self, rng: &mut R) -> Point {
        let total = *self.cumulative.last().expect("non-empty fan");
        let pick = rng.random_range(0.0..total);
        let idx = self.cumulative.iter().position(|&c| pick < c).unwrap_or(self.triangles.len() - 1);
        let [a, b, c] = self.triangles[idx];
        let (mut s, mut t): (f64, f64) = (rng.random(), rng.random());
        if s + t > 1.0 {
            s = 1.0 - s;
            t = 1.0 - t;
        }
        a + (b - a) * s + (c - a) * t
    }
}

/// Grid of probe points covering the closed polygon, used to estimate sup norms.
fn probe_points(poly: &ConvexPolygon, per_axis: usize) -> Vec<Point> {
    let (lo, hi) = poly.bounding_box();
    let mut out = Vec::new();
    for i in 0..=per_axis {
        for j in 0..=per_axis {
            let p = Point::new(
                lo.x1 + (hi.x1 - lo.x1) * i as f64 / per_axis as f64,
                lo.x2 + (hi.x2 - lo.x2) * j as f64 / per_axis as f64,
            );
            if poly.contains_closed(p, 1e-12) {
                out.push(p);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{half_equilateral_triangle, motions_from_vertices, sqrt3, sqrt3_rectangle};
    use crate::spectral::{build_basis, BasisKind, BasisSpec, DirichletRectangle};

    fn literal_text_tiling() -> Tiling {
        // v₁ read as (0, 1/√3).
        let motions = motions_from_vertices(Point::new(0.0, 1.0 / sqrt3()), Point::new(0.0, 1.0));
        Tiling::new(half_equilateral_triangle(), sqrt3_rectangle(), motions.to_vec()).unwrap()
    }

    fn interior_samples(poly: &ConvexPolygon, n: usize, seed: u64) -> Vec<Point> {
        let sampler = TriangleSampler::new(poly);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        while out.len() < n {
            let p = sampler.sample(&mut rng);
            if poly.contains(p, 1e-6) == Containment::Inside {
                out.push(p);
            }
        }
        out
    }

    fn rect_modes(width: f64, height: f64, max_k: u32) -> EigenBasis {
        let spec = BasisSpec { max_k1: max_k, max_k2: max_k, ..BasisSpec::default() };
        build_basis(&BasisKind::Rectangle(DirichletRectangle::new(width, height).unwrap()), &spec).unwrap()
    }

    #[test]
    fn sign_vector_validation() {
        assert!(SignVector::new([1, -1, 1]).is_ok());
        assert_eq!(SignVector::new([1, 0]).unwrap_err(), TilingError::InvalidSign(0));
        assert_eq!(SignVector::half_equilateral().negated().entries(), &[-1, 1, -1, -1, 1, -1]);
        let t = Tiling::half_equilateral();
        let err = t.clone().with_signs(SignVector::new([1, 1]).unwrap()).unwrap_err();
        assert_eq!(err, TilingError::SignLength { expected: 6, got: 2 });
    }

    #[test]
    fn half_equilateral_tiling_validates() {
        let report = Tiling::half_equilateral().validate(20_000, 1e-9, 0).unwrap();
        assert!(report.pass, "{report:?}");
        assert_eq!(report.coverage_fraction, 1.0);
        assert_eq!(report.max_overlap_count, 1);
    }

    #[test]
    fn doubled_square_validates() {
        let report = Tiling::doubled_square().validate(20_000, 1e-9, 1).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn literal_v1_fails_coverage() {
        let report = literal_text_tiling().validate(20_000, 1e-9, 2).unwrap();
        assert!(!report.pass);
        assert!(report.coverage_fraction < 1.0);
        assert!(!report.uncovered.is_empty());
    }

    #[test]
    fn validate_rejects_small_sample_counts() {
        assert_eq!(
            Tiling::half_equilateral().validate(10, 1e-9, 0).unwrap_err(),
            TilingError::TooFewSamples(10)
        );
    }

    #[test]
    fn prolong_constant_picks_up_signs() {
        let t = Tiling::half_equilateral();
        let delta = SignVector::half_equilateral();
        let one = DomainFn::new(t.tile().clone(), |_| 1.0);
        let p = t.prolong(&one, &delta).unwrap();
        for (h, img) in t.images().iter().enumerate() {
            assert_eq!(p.eval(img.centroid()).unwrap(), delta.get(h));
        }
        assert!(matches!(p.eval(Point::new(2.0, 0.5)), Err(TilingError::OutsideDomain(_))));
    }

    #[test]
    fn prolong_at_image_point() {
        let t = Tiling::half_equilateral();
        let delta = SignVector::half_equilateral();
        let u = DomainFn::new(t.tile().clone(), |p: Point| p.x1 * (1.0 - p.x2) + 0.3);
        let pu = t.prolong(&u, &delta).unwrap();
        for p in interior_samples(t.tile(), 20, 5) {
            for h in 0..6 {
                let got = pu.eval(t.motions()[h].apply(p)).unwrap();
                assert!((got - delta.get(h) * u.eval(p).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fold_of_prolong_is_u_over_n() {
        for t in [Tiling::half_equilateral(), Tiling::doubled_square()] {
            let delta = t.signs().unwrap().clone();
            let u = DomainFn::new(t.tile().clone(), |p: Point| (3.0 * p.x1).sin() * p.x2 + p.x1 * p.x1);
            let pu = t.prolong(&u, &delta).unwrap();
            let fpu = t.fold(&pu, &delta).unwrap();
            let n = t.len() as f64;
            for p in interior_samples(t.tile(), 100, 9) {
                let diff = fpu.eval(p).unwrap() - u.eval(p).unwrap() / n;
                assert!(diff.abs() < 1e-12, "{diff}");
            }
        }
    }

    #[test]
    fn zero_function_folds_to_zero() {
        let t = Tiling::split_rectangle();
        let delta = SignVector::new([1, -1]).unwrap();
        let zero = DomainFn::new(t.target().clone(), |_| 0.0);
        let f = t.fold(&zero, &delta).unwrap();
        for p in t.tile().boundary_samples(8).unwrap() {
            assert_eq!(f.eval(p).unwrap(), 0.0);
        }
    }

    #[test]
    fn boundary_cancellation_on_reference_examples() {
        let t = Tiling::half_equilateral();
        let delta = SignVector::half_equilateral();
        assert!(t.boundary_cancellation_check(&delta, 64, 1e-9).unwrap());
        assert!(t.boundary_cancellation_check(&delta.negated(), 64, 1e-9).unwrap());
        assert!(!t.boundary_cancellation_check(&SignVector::new([1; 6]).unwrap(), 64, 1e-9).unwrap());

        let sq = Tiling::doubled_square();
        assert!(sq.boundary_cancellation_check(&SignVector::new([1, -1, -1, 1]).unwrap(), 64, 1e-9).unwrap());

        let bad = Tiling::split_rectangle();
        for signs in [[1, 1], [1, -1], [-1, 1], [-1, -1]] {
            let s = SignVector::new(signs).unwrap();
            let report = bad.boundary_cancellation(&s, 64, 1e-9).unwrap();
            assert!(!report.passed());
            assert!(report.failures.iter().all(|f| f.members.len() == 1));
        }
    }

    #[test]
    fn admissible_sign_sets() {
        let found = Tiling::half_equilateral().find_admissible_signs(64, 1e-9).unwrap();
        let d = SignVector::half_equilateral();
        assert_eq!(found.len(), 2);
        assert!(found.contains(&d) && found.contains(&d.negated()));

        let found = Tiling::doubled_square().find_admissible_signs(64, 1e-9).unwrap();
        let d = SignVector::new([1, -1, -1, 1]).unwrap();
        assert_eq!(found, vec![d.clone(), d.negated()]);

        assert!(Tiling::split_rectangle().find_admissible_signs(64, 1e-9).unwrap().is_empty());
    }

    #[test]
    fn functional_check_agrees_with_structural() {
        let t = Tiling::half_equilateral();
        let modes = rect_modes(sqrt3(), 1.0, 5);
        assert!(t.functional_admissibility_check(&SignVector::half_equilateral(), &modes, 20, 1e-9, 0).unwrap());
        assert!(!t.functional_admissibility_check(&SignVector::new([1; 6]).unwrap(), &modes, 20, 1e-9, 0).unwrap());

        let sq = Tiling::doubled_square();
        let modes = rect_modes(2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI, 5);
        assert!(sq.functional_admissibility_check(sq.signs().unwrap(), &modes, 20, 1e-9, 0).unwrap());

        let bad = Tiling::split_rectangle();
        let modes = rect_modes(1.0 / sqrt3(), 1.0, 5);
        for signs in [[1, 1], [1, -1], [-1, 1], [-1, -1]] {
            let s = SignVector::new(signs).unwrap();
            assert!(!bad.functional_admissibility_check(&s, &modes, 20, 1e-9, 0).unwrap());
        }
    }

    #[test]
    fn split_rectangle_maps_hypotenuse_to_itself_reversed() {
        let t = Tiling::split_rectangle();
        let [_, v1, v2] = geometry::half_equilateral_vertices();
        for lambda in [0.1, 0.25, 0.7] {
            let x = Point::lerp(lambda, v1, v2);
            let y = t.motions()[1].apply(x);
            assert!(y.dist(Point::lerp(1.0 - lambda, v1, v2)) < 1e-15);
        }
    }

    #[test]
    fn pullback_of_whole_target_and_of_a_tile_image() {
        let t = Tiling::half_equilateral();
        let all = t.pullback(Region::single(t.target().clone()));
        let img3 = t.pullback(Region::single(t.images()[2].clone()));
        for p in interior_samples(t.tile(), 200, 4) {
            assert!(all.contains(p));
            assert_eq!(all.multiplicity(p), 6);
            assert!(img3.contains(p));
            assert_eq!(img3.multiplicity(p), 1);
        }
        assert!(!all.contains(Point::new(1.0, 1.0)));
    }

    #[test]
    fn pullback_left_half_matches_brute_force() {
        let t = Tiling::half_equilateral();
        let half = ConvexPolygon::rectangle(Point::ORIGIN, Point::new(sqrt3() / 2.0, 1.0)).unwrap();
        let pb = t.pullback(Region::single(half));
        for p in interior_samples(t.tile(), 500, 8) {
            let brute = (0..6).filter(|&h| t.motions()[h].apply(p).x1 < sqrt3() / 2.0).count();
            assert_eq!(pb.multiplicity(p), brute);
            assert_eq!(pb.contains(p), brute > 0);
            // K₁, K₂ images lie left of the midline for every x.
            assert!(brute >= 2);
        }
    }

    proptest::proptest! {
        #[test]
        fn sign_symmetry(mask in 0u32..64) {
            let t = Tiling::half_equilateral();
            let s = SignVector::from_mask(mask, 6);
            proptest::prop_assert_eq!(
                t.boundary_cancellation_check(&s, 16, 1e-9).unwrap(),
                t.boundary_cancellation_check(&s.negated(), 16, 1e-9).unwrap()
            );
        }

        #[test]
        fn pullback_monotone(w_small in 0.1..0.9f64, extra in 0.0..0.8f64, seed in 0u64..1000) {
            let t = Tiling::half_equilateral();
            let w_big = (w_small + extra).min(1.0);
            let region = |w: f64| Region::single(
                ConvexPolygon::rectangle(Point::ORIGIN, Point::new(w * sqrt3(), 1.0)).unwrap());
            let a = t.pullback(region(w_small));
            let b = t.pullback(region(w_big));
            for p in interior_samples(t.tile(), 50, seed) {
                proptest::prop_assert!(!a.contains(p) || b.contains(p));
                proptest::prop_assert!(a.multiplicity(p) <= b.multiplicity(p));
            }
        }
    }
}
