//! Dirichlet eigenbases: sine products on rectangles and the folded
//! eigenfunctions `e_k = Σ_h δ_h ē_k ∘ K_h` on a tile.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::SpectralError;
use crate::geometry::{self, ConvexPolygon, Point, DEFAULT_BOUNDARY_TOL};
use crate::quadrature::QuadratureRule;
use crate::tiling::{PointFunction, SignVector, Tiling};
use crate::error::TilingError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub k1: u32,
    pub k2: u32,
}

impl ModeIndex {
    pub fn new(k1: u32, k2: u32) -> Result<Self, SpectralError> {
        if k1 == 0 || k2 == 0 {
            return Err(SpectralError::InvalidIndex { k1, k2 });
        }
        Ok(Self { k1, k2 })
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k1, self.k2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    RectangleRaw,
    TriangleFolded,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::RectangleRaw => "rectangle_raw",
            Provenance::TriangleFolded => "triangle_folded",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rectangle_raw" => Some(Provenance::RectangleRaw),
            "triangle_folded" => Some(Provenance::TriangleFolded),
            _ => None,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub index: ModeIndex,
    /// γ_k, in 1/length².
    pub eigenvalue: f64,
    /// Multiplies the raw function to give unit L² norm on the basis domain.
    pub norm_factor: f64,
    pub provenance: Provenance,
}

impl EigenPair {
    pub fn omega(&self) -> f64 {
        self.eigenvalue.sqrt()
    }
}

/// Sine modes `sin(πk₁x₁/w) sin(πk₂x₂/h)` of `(0,w)×(0,h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletRectangle {
    width: f64,
    height: f64,
}

impl DirichletRectangle {
    pub fn new(width: f64, height: f64) -> Result<Self, SpectralError> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(SpectralError::ParentNotRectangle);
        }
        Ok(Self { width, height })
    }

    /// `(0, √3) × (0, 1)`
    pub fn sqrt3() -> Self {
        Self { width: geometry::sqrt3(), height: 1.0 }
    }

    /// Recognizes `[0,w]×[0,h]`.
    pub fn from_polygon(poly: &ConvexPolygon) -> Result<Self, SpectralError> {
        let (lo, hi) = poly.as_axis_rectangle().ok_or(SpectralError::ParentNotRectangle)?;
        if lo != Point::ORIGIN {
            return Err(SpectralError::ParentNotRectangle);
        }
        Self::new(hi.x1, hi.x2)
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn polygon(&self) -> ConvexPolygon {
        ConvexPolygon::rectangle(Point::ORIGIN, Point::new(self.width, self.height))
            .expect("positive sides")
    }

    pub fn eval(&self, k: ModeIndex, p: Point) -> f64 {
        (PI * f64::from(k.k1) * p.x1 / self.width).sin() * (PI * f64::from(k.k2) * p.x2 / self.height).sin()
    }

    pub fn eigenvalue(&self, k: ModeIndex) -> f64 {
        let a = f64::from(k.k1) / self.width;
        let b = f64::from(k.k2) / self.height;
        PI * PI * (a * a + b * b)
    }

    /// `2/√(wh)`: `∫ sin² sin² = wh/4`.
    pub fn norm_factor(&self) -> f64 {
        2.0 / (self.width * self.height).sqrt()
    }
}

/// Raw `ē_k(p) = sin(πk₁x₁/√3) sin(πk₂x₂)`.
pub fn rect_eigenfunction(k: ModeIndex, p: Point) -> f64 {
    DirichletRectangle::sqrt3().eval(k, p)
}

/// `γ_k = π²(k₁²/3 + k₂²)`
pub fn rect_eigenvalue(k: ModeIndex) -> f64 {
    DirichletRectangle::sqrt3().eigenvalue(k)
}

/// `Σ_h δ_h ē_k(K_h p)` for the parent rectangle modes `ē_k`.
pub fn folded_eigenfunction_raw(
    parent: &DirichletRectangle,
    k: ModeIndex,
    p: Point,
    tiling: &Tiling,
    signs: &SignVector,
) -> f64 {
    tiling
        .motions()
        .iter()
        .enumerate()
        .map(|(h, m)| signs.get(h) * parent.eval(k, m.apply(p)))
        .sum()
}

/// `e_k(p) = Σ_h δ_h ē_k(K_h p)` over the six motions of the half-equilateral
/// tiling. Entire in `p`.
pub fn triangle_eigenfunction_raw(k: ModeIndex, p: Point, tiling: &Tiling, signs: &SignVector) -> f64 {
    folded_eigenfunction_raw(&DirichletRectangle::sqrt3(), k, p, tiling, signs)
}

/// Where the basis functions come from.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisKind {
    Rectangle(DirichletRectangle),
    /// Folded parent-rectangle modes. The tiling carries its sign vector and
    /// its target is the parent rectangle.
    Folded { parent: DirichletRectangle, tiling: Tiling },
}

impl BasisKind {
    pub fn folded(tiling: Tiling) -> Result<Self, SpectralError> {
        tiling.require_signs()?;
        let parent = DirichletRectangle::from_polygon(tiling.target())?;
        Ok(BasisKind::Folded { parent, tiling })
    }

    pub fn half_equilateral() -> Self {
        Self::folded(Tiling::half_equilateral()).expect("reference tiling")
    }

    pub fn sqrt3_rectangle() -> Self {
        BasisKind::Rectangle(DirichletRectangle::sqrt3())
    }

    pub fn parent(&self) -> &DirichletRectangle {
        match self {
            BasisKind::Rectangle(r) => r,
            BasisKind::Folded { parent, .. } => parent,
        }
    }

    pub fn tiling(&self) -> Option<&Tiling> {
        match self {
            BasisKind::Rectangle(_) => None,
            BasisKind::Folded { tiling, .. } => Some(tiling),
        }
    }

    /// The domain the basis is orthonormal on.
    pub fn natural_domain(&self) -> ConvexPolygon {
        match self {
            BasisKind::Rectangle(r) => r.polygon(),
            BasisKind::Folded { tiling, .. } => tiling.tile().clone(),
        }
    }

    pub fn provenance(&self) -> Provenance {
        match self {
            BasisKind::Rectangle(_) => Provenance::RectangleRaw,
            BasisKind::Folded { .. } => Provenance::TriangleFolded,
        }
    }

    fn raw(&self, k: ModeIndex, p: Point) -> f64 {
        match self {
            BasisKind::Rectangle(r) => r.eval(k, p),
            BasisKind::Folded { parent, tiling } => {
                let signs = tiling.signs().expect("checked at construction");
                folded_eigenfunction_raw(parent, k, p, tiling, signs)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub max_k1: u32,
    pub max_k2: u32,
    pub quad_order: usize,
    /// Candidates with `‖e_k‖ < zero_tol · max‖e_j‖` are dropped.
    pub zero_tol: f64,
    /// Candidates with `|⟨e_k, e_j⟩| > 1 − dup_tol` against a kept mode are dropped.
    pub dup_tol: f64,
    /// Keep at most this many modes, in eigenvalue order.
    pub max_modes: Option<usize>,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self { max_k1: 8, max_k2: 8, quad_order: 24, zero_tol: 1e-8, dup_tol: 1e-8, max_modes: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DropReason {
    /// Relative L² norm on the tile.
    Vanishes { relative_norm: f64 },
    Duplicate { of: ModeIndex, overlap: f64 },
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroppedMode {
    pub index: ModeIndex,
    pub reason: DropReason,
}

/// Normalized eigenpairs on a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    domain: ConvexPolygon,
    kind: BasisKind,
    pairs: Vec<EigenPair>,
    dropped: Vec<DroppedMode>,
}

impl EigenBasis {
    /// Reassembles a basis from stored pairs, e.g. a cache.
    pub fn from_pairs(kind: BasisKind, pairs: Vec<EigenPair>) -> Result<Self, SpectralError> {
        if pairs.is_empty() {
            return Err(SpectralError::EmptyBasis);
        }
        Ok(Self { domain: kind.natural_domain(), kind, pairs, dropped: Vec::new() })
    }

    pub fn domain(&self) -> &ConvexPolygon {
        &self.domain
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    pub fn pairs(&self) -> &[EigenPair] {
        &self.pairs
    }

    pub fn dropped(&self) -> &[DroppedMode] {
        &self.dropped
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.eigenvalue).collect()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.pairs.iter().map(EigenPair::omega).collect()
    }

    /// True when the basis lives on its natural domain (and is orthonormal there).
    pub fn is_native(&self) -> bool {
        self.domain == self.kind.natural_domain()
    }

    /// The same modes viewed on the tiling target `Ω′`, spanning the
    /// prolongation subspace `𝓟_δ L²(Ω)`. Norm factors stay tile-normalized,
    /// so the Gram matrix on `Ω′` is `N·I`.
    pub fn on_target(&self) -> Result<EigenBasis, SpectralError> {
        let tiling = self.kind.tiling().ok_or(SpectralError::NotFolded)?;
        Ok(Self { domain: tiling.target().clone(), ..self.clone() })
    }

    /// First `n` modes.
    pub fn truncated(&self, n: usize) -> Result<EigenBasis, SpectralError> {
        if n == 0 {
            return Err(SpectralError::EmptyBasis);
        }
        let mut out = self.clone();
        out.pairs.truncate(n);
        Ok(out)
    }

    /// Normalized mode `i` at `p`.
    pub fn eval_mode(&self, i: usize, p: Point) -> f64 {
        let pair = &self.pairs[i];
        pair.norm_factor * self.kind.raw(pair.index, p)
    }

    pub fn evaluator(&self) -> ModeEvaluator<'_> {
        ModeEvaluator::new(self)
    }

    /// All normalized modes at `p` into `out`.
    pub fn eval_all(&self, p: Point, out: &mut [f64]) {
        self.evaluator().eval_all(p, out);
    }

    /// Modes × nodes matrix of normalized values.
    pub fn sample_matrix(&self, nodes: &[Point]) -> DMatrix<f64> {
        let mut ev = self.evaluator();
        let mut values = vec![0.0; self.len()];
        let mut m = DMatrix::zeros(self.len(), nodes.len());
        for (j, &p) in nodes.iter().enumerate() {
            ev.eval_all(p, &mut values);
            m.column_mut(j).copy_from_slice(&values);
        }
        m
    }

    /// `G_ij = Σ_q w_q e_i(x_q) e_j(x_q)`
    pub fn gram(&self, rule: &QuadratureRule) -> DMatrix<f64> {
        let e = self.sample_matrix(rule.nodes());
        let mut ew = e.clone();
        for (j, w) in rule.weights().iter().enumerate() {
            ew.column_mut(j).scale_mut(*w);
        }
        &ew * e.transpose()
    }
}

/// Evaluates every mode of a basis at a point, sharing the sine tables
/// between modes.
pub struct ModeEvaluator<'a> {
    basis: &'a EigenBasis,
    images: Vec<(f64, Point)>,
    s1: Vec<f64>,
    s2: Vec<f64>,
    max_k1: usize,
    max_k2: usize,
}

impl<'a> ModeEvaluator<'a> {
    fn new(basis: &'a EigenBasis) -> Self {
        let max_k1 = basis.pairs.iter().map(|p| p.index.k1).max().unwrap_or(1) as usize;
        let max_k2 = basis.pairs.iter().map(|p| p.index.k2).max().unwrap_or(1) as usize;
        let n_images = basis.kind.tiling().map_or(1, Tiling::len);
        Self {
            basis,
            images: Vec::with_capacity(n_images),
            s1: vec![0.0; n_images * (max_k1 + 1)],
            s2: vec![0.0; n_images * (max_k2 + 1)],
            max_k1,
            max_k2,
        }
    }

    pub fn eval_all(&mut self, p: Point, out: &mut [f64]) {
        let parent = *self.basis.kind.parent();
        self.images.clear();
        match &self.basis.kind {
            BasisKind::Rectangle(_) => self.images.push((1.0, p)),
            BasisKind::Folded { tiling, .. } => {
                let signs = tiling.signs().expect("checked at construction");
                for (h, m) in tiling.motions().iter().enumerate() {
                    self.images.push((signs.get(h), m.apply(p)));
                }
            }
        }
        let (n1, n2) = (self.max_k1 + 1, self.max_k2 + 1);
        for (i, (_, y)) in self.images.iter().enumerate() {
            let a = PI * y.x1 / parent.width;
            let b = PI * y.x2 / parent.height;
            for j in 1..n1 {
                self.s1[i * n1 + j] = (a * j as f64).sin();
            }
            for j in 1..n2 {
                self.s2[i * n2 + j] = (b * j as f64).sin();
            }
        }
        for (slot, pair) in out.iter_mut().zip(&self.basis.pairs) {
            let (k1, k2) = (pair.index.k1 as usize, pair.index.k2 as usize);
            let raw: f64 = self
                .images
                .iter()
                .enumerate()
                .map(|(i, (sign, _))| sign * self.s1[i * n1 + k1] * self.s2[i * n2 + k2])
                .sum();
            *slot = pair.norm_factor * raw;
        }
    }
}

/// Candidate indices of the box, by eigenvalue with lexicographic tie-break.
fn sorted_candidates(parent: &DirichletRectangle, max_k1: u32, max_k2: u32) -> Vec<(ModeIndex, f64)> {
    let mut cands: Vec<(ModeIndex, f64)> = (1..=max_k1)
        .flat_map(|k1| (1..=max_k2).map(move |k2| ModeIndex { k1, k2 }))
        .map(|k| (k, parent.eigenvalue(k)))
        .collect();
    cands.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    // Exact ties can differ in the last bits; regroup them lexicographically.
    let mut start = 0;
    while start < cands.len() {
        let base = cands[start].1;
        let mut end = start + 1;
        while end < cands.len() && (cands[end].1 - base).abs() <= 1e-12 * base {
            end += 1;
        }
        cands[start..end].sort_by_key(|c| c.0);
        start = end;
    }
    cands
}

/// Enumerates the index box, filters vanishing and duplicate folded modes,
/// and normalizes the survivors to unit L² norm on the natural domain.
pub fn build_basis(kind: &BasisKind, spec: &BasisSpec) -> Result<EigenBasis, SpectralError> {
    if spec.max_k1 == 0 || spec.max_k2 == 0 {
        return Err(SpectralError::EmptyIndexBox(spec.max_k1, spec.max_k2));
    }
    if spec.quad_order < 2 {
        return Err(SpectralError::QuadratureOrder(spec.quad_order));
    }
    let parent = kind.parent();
    let candidates = sorted_candidates(parent, spec.max_k1, spec.max_k2);
    let provenance = kind.provenance();
    let mut pairs = Vec::new();
    let mut dropped = Vec::new();
    match kind {
        BasisKind::Rectangle(rect) => {
            for (index, eigenvalue) in candidates {
                pairs.push(EigenPair { index, eigenvalue, norm_factor: rect.norm_factor(), provenance });
            }
        }
        BasisKind::Folded { .. } => {
            let domain = kind.natural_domain();
            let rule = QuadratureRule::polygon(&domain, spec.quad_order)?;
            let raw: Vec<Vec<f64>> = candidates
                .iter()
                .map(|(k, _)| rule.nodes().iter().map(|&p| kind.raw(*k, p)).collect())
                .collect();
            let inner = |a: &[f64], b: &[f64]| -> f64 {
                a.iter().zip(b).zip(rule.weights()).map(|((x, y), w)| x * y * w).sum()
            };
            let norms: Vec<f64> = raw.iter().map(|v| inner(v, v).sqrt()).collect();
            let max_norm = norms.iter().copied().fold(0.0, f64::max);
            let mut kept: Vec<(ModeIndex, Vec<f64>)> = Vec::new();
            for (((index, eigenvalue), values), norm) in candidates.iter().zip(raw).zip(norms) {
                // Σ_h ‖ē_k∘K_h‖ bounds ‖e_k‖ with no cancellation; it keeps the
                // test meaningful when every candidate in the box vanishes.
                let scale = unfolded_norm_bound(kind, *index, &rule);
                if norm < spec.zero_tol * max_norm || norm < spec.zero_tol * scale || norm == 0.0 {
                    let relative_norm = norm / max_norm.max(scale);
                    dropped.push(DroppedMode { index: *index, reason: DropReason::Vanishes { relative_norm } });
                    continue;
                }
                let unit: Vec<f64> = values.iter().map(|v| v / norm).collect();
                let duplicate = kept.iter().find_map(|(j, other)| {
                    let overlap = inner(&unit, other);
                    (overlap.abs() > 1.0 - spec.dup_tol).then_some((*j, overlap))
                });
                if let Some((of, overlap)) = duplicate {
                    dropped.push(DroppedMode { index: *index, reason: DropReason::Duplicate { of, overlap } });
                    continue;
                }
                kept.push((*index, unit));
                pairs.push(EigenPair { index: *index, eigenvalue: *eigenvalue, norm_factor: 1.0 / norm, provenance });
            }
        }
    }
    if let Some(cap) = spec.max_modes {
        for pair in pairs.iter().skip(cap) {
            dropped.push(DroppedMode { index: pair.index, reason: DropReason::Truncated });
        }
        pairs.truncate(cap);
    }
    if pairs.is_empty() {
        return Err(SpectralError::EmptyBasis);
    }
    Ok(EigenBasis { domain: kind.natural_domain(), kind: kind.clone(), pairs, dropped })
}

fn unfolded_norm_bound(kind: &BasisKind, k: ModeIndex, rule: &QuadratureRule) -> f64 {
    let BasisKind::Folded { parent, tiling } = kind else {
        return 0.0;
    };
    tiling
        .motions()
        .iter()
        .map(|m| {
            rule.nodes()
                .iter()
                .zip(rule.weights())
                .map(|(&p, w)| w * parent.eval(k, m.apply(p)).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .sum()
}

/// `c_k = ∫ f e_k` over the basis domain.
pub fn coefficients<F: PointFunction + ?Sized>(
    f: &F,
    basis: &EigenBasis,
    quad_order: usize,
) -> Result<Vec<f64>, SpectralError> {
    let rule = QuadratureRule::polygon(basis.domain(), quad_order)?;
    let mut ev = basis.evaluator();
    let mut values = vec![0.0; basis.len()];
    let mut c = vec![0.0; basis.len()];
    for (&p, &w) in rule.nodes().iter().zip(rule.weights()) {
        let fp = f.eval(p)?;
        ev.eval_all(p, &mut values);
        for (ci, vi) in c.iter_mut().zip(&values) {
            *ci += w * fp * vi;
        }
    }
    Ok(c)
}

/// `Σ_k c_k e_k` as a point function on the basis domain.
#[derive(Debug, Clone)]
pub struct ModalField<'a> {
    basis: &'a EigenBasis,
    coeffs: Vec<f64>,
}

impl<'a> ModalField<'a> {
    pub fn new(basis: &'a EigenBasis, coeffs: Vec<f64>) -> Result<Self, SpectralError> {
        if coeffs.len() != basis.len() {
            return Err(SpectralError::LengthMismatch { expected: basis.len(), got: coeffs.len() });
        }
        Ok(Self { basis, coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Evaluates without the domain check; the folded modes are entire.
    pub fn eval_anywhere(&self, p: Point) -> f64 {
        let mut values = vec![0.0; self.basis.len()];
        self.basis.eval_all(p, &mut values);
        values.iter().zip(&self.coeffs).map(|(v, c)| v * c).sum()
    }
}

impl PointFunction for ModalField<'_> {
    fn domain(&self) -> &ConvexPolygon {
        self.basis.domain()
    }

    fn eval(&self, p: Point) -> Result<f64, TilingError> {
        if !self.basis.domain().contains_closed(p, DEFAULT_BOUNDARY_TOL) {
            return Err(TilingError::OutsideDomain(p));
        }
        Ok(self.eval_anywhere(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sqrt3, Containment};
    use crate::tiling::DomainFn;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k(k1: u32, k2: u32) -> ModeIndex {
        ModeIndex::new(k1, k2).unwrap()
    }

    /// Five-point finite-difference Laplacian.
    fn fd_laplacian<F: Fn(Point) -> f64>(f: F, p: Point, h: f64) -> f64 {
        let c = f(p);
        (f(Point::new(p.x1 + h, p.x2)) + f(Point::new(p.x1 - h, p.x2)) + f(Point::new(p.x1, p.x2 + h))
            + f(Point::new(p.x1, p.x2 - h))
            - 4.0 * c)
            / (h * h)
    }

    fn interior_points(poly: &ConvexPolygon, n: usize, seed: u64) -> Vec<Point> {
        let (lo, hi) = poly.bounding_box();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        while out.len() < n {
            let p = Point::new(rng.random_range(lo.x1..hi.x1), rng.random_range(lo.x2..hi.x2));
            if poly.contains(p, 1e-3) == Containment::Inside {
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn mode_index_rejects_zero() {
        assert!(ModeIndex::new(0, 1).is_err());
        assert!(ModeIndex::new(1, 0).is_err());
    }

    #[test]
    fn rect_eigenfunction_values() {
        assert!((rect_eigenfunction(k(1, 1), Point::new(sqrt3() / 2.0, 0.5)) - 1.0).abs() < 1e-15);
        assert!((rect_eigenfunction(k(2, 1), Point::new(sqrt3() / 4.0, 0.5)) - 1.0).abs() < 1e-15);
        let rect = geometry::sqrt3_rectangle();
        for p in rect.boundary_samples(9).unwrap() {
            for kk in [k(1, 1), k(3, 2), k(5, 4)] {
                assert!(rect_eigenfunction(kk, p).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rect_eigenvalue_formula() {
        assert!((rect_eigenvalue(k(1, 1)) - 4.0 * PI * PI / 3.0).abs() < 1e-12);
        assert!((rect_eigenvalue(k(1, 1)) - 13.1595).abs() < 1e-4);
        assert!((rect_eigenvalue(k(3, 1)) - 4.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn rect_eigenvalue_matches_finite_differences() {
        let rect = geometry::sqrt3_rectangle();
        for kk in [k(1, 1), k(2, 3), k(4, 1)] {
            for p in interior_points(&rect, 10, 1) {
                let f = |q: Point| rect_eigenfunction(kk, q);
                let value = f(p);
                if value.abs() < 1e-2 {
                    continue;
                }
                let ratio = -fd_laplacian(f, p, 1e-4) / value;
                assert!((ratio - rect_eigenvalue(kk)).abs() / rect_eigenvalue(kk) < 1e-6, "{kk} {ratio}");
            }
        }
    }

    #[test]
    fn triangle_modes_vanish_on_tile_boundary() {
        let t = Tiling::half_equilateral();
        let d = SignVector::half_equilateral();
        for kk in [k(1, 3), k(2, 4), k(4, 2), k(3, 5)] {
            for p in t.tile().boundary_samples(64).unwrap() {
                assert!(triangle_eigenfunction_raw(kk, p, &t, &d).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rectangle_basis_is_orthonormal() {
        let basis = build_basis(&BasisKind::sqrt3_rectangle(), &BasisSpec { max_k1: 4, max_k2: 4, ..Default::default() })
            .unwrap();
        assert_eq!(basis.len(), 16);
        let rule = QuadratureRule::polygon(basis.domain(), 24).unwrap();
        let g = basis.gram(&rule);
        let defect = (g - DMatrix::identity(16, 16)).abs().max();
        assert!(defect < 1e-8, "{defect}");
    }

    #[test]
    fn candidate_order_breaks_ties_lexicographically() {
        let order = sorted_candidates(&DirichletRectangle::sqrt3(), 6, 6);
        let pos = |kk: ModeIndex| order.iter().position(|c| c.0 == kk).unwrap();
        // γ(1,3) = γ(4,2) = γ(5,1) = 28π²/3
        assert!(pos(k(1, 3)) + 1 == pos(k(4, 2)) && pos(k(4, 2)) + 1 == pos(k(5, 1)));
        assert!(order.windows(2).all(|w| w[0].1 <= w[1].1 * (1.0 + 1e-12)));
    }

    #[test]
    fn triangle_basis_filtering() {
        let basis = build_basis(
            &BasisKind::half_equilateral(),
            &BasisSpec { max_k1: 4, max_k2: 4, ..Default::default() },
        )
        .unwrap();
        assert!(basis.len() <= 16);
        let kept: Vec<ModeIndex> = basis.pairs().iter().map(|p| p.index).collect();
        // Regression value: the (4,4) box keeps two modes.
        assert_eq!(kept, vec![k(1, 3), k(2, 4)]);
        assert_eq!(basis.dropped().len(), 14);
        let dup = basis.dropped().iter().find(|d| d.index == k(4, 2)).unwrap();
        assert!(matches!(dup.reason, DropReason::Duplicate { of, .. } if of == k(1, 3)));
        // The first kept eigenvalue is a rectangle eigenvalue of a surviving index.
        assert_eq!(basis.pairs()[0].eigenvalue, rect_eigenvalue(k(1, 3)));
    }

    #[test]
    fn max_modes_truncates() {
        let spec = BasisSpec { max_k1: 8, max_k2: 8, max_modes: Some(3), ..Default::default() };
        let basis = build_basis(&BasisKind::half_equilateral(), &spec).unwrap();
        assert_eq!(basis.len(), 3);
        assert!(basis.dropped().iter().any(|d| d.reason == DropReason::Truncated));
    }

    #[test]
    fn empty_after_filtering_is_an_error() {
        let spec = BasisSpec { max_k1: 3, max_k2: 2, ..Default::default() };
        assert_eq!(build_basis(&BasisKind::half_equilateral(), &spec).unwrap_err(), SpectralError::EmptyBasis);
        let spec = BasisSpec { max_k1: 0, ..Default::default() };
        assert!(matches!(build_basis(&BasisKind::sqrt3_rectangle(), &spec), Err(SpectralError::EmptyIndexBox(..))));
    }

    #[test]
    fn coefficients_of_basis_member_and_zero() {
        let basis = build_basis(&BasisKind::half_equilateral(), &BasisSpec { max_k1: 6, max_k2: 6, ..Default::default() })
            .unwrap();
        let m = basis.len();
        for j in 0..m {
            let f = DomainFn::new(basis.domain().clone(), |p| basis.eval_mode(j, p));
            let c = coefficients(&f, &basis, 24).unwrap();
            for (i, ci) in c.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ci - expected).abs() < 1e-8, "{i} {j} {ci}");
            }
        }
        let zero = DomainFn::new(basis.domain().clone(), |_| 0.0);
        assert!(coefficients(&zero, &basis, 24).unwrap().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn evaluator_matches_direct_formula() {
        let basis = build_basis(&BasisKind::half_equilateral(), &BasisSpec { max_k1: 8, max_k2: 8, ..Default::default() })
            .unwrap();
        let t = Tiling::half_equilateral();
        let d = SignVector::half_equilateral();
        let mut out = vec![0.0; basis.len()];
        for p in interior_points(basis.domain(), 10, 3) {
            basis.eval_all(p, &mut out);
            for (i, pair) in basis.pairs().iter().enumerate() {
                let direct = pair.norm_factor * triangle_eigenfunction_raw(pair.index, p, &t, &d);
                assert!((out[i] - direct).abs() < 1e-12);
                assert!((basis.eval_mode(i, p) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn on_target_requires_folded_basis() {
        let rect = build_basis(&BasisKind::sqrt3_rectangle(), &BasisSpec::default()).unwrap();
        assert_eq!(rect.on_target().unwrap_err(), SpectralError::NotFolded);
        let tri = build_basis(&BasisKind::half_equilateral(), &BasisSpec::default()).unwrap();
        let on_rect = tri.on_target().unwrap();
        assert!(!on_rect.is_native());
        assert_eq!(on_rect.domain(), &geometry::sqrt3_rectangle());
        // Gram on the target is N·I.
        let g = on_rect.gram(&QuadratureRule::polygon(on_rect.domain(), 40).unwrap());
        let defect = (g - DMatrix::identity(tri.len(), tri.len()) * 6.0).abs().max();
        assert!(defect < 1e-9, "{defect}");
    }

    #[test]
    fn square_folding_reproduces_sine_modes() {
        // Folding the (0,2π)² modes onto (0,π)² with δ=(1,−1,−1,1).
        let t = Tiling::doubled_square();
        let basis = build_basis(&BasisKind::folded(t.clone()).unwrap(), &BasisSpec { max_k1: 6, max_k2: 6, ..Default::default() })
            .unwrap();
        // Only even parent indices survive: ē_(2a,2b)(x) = sin(a x₁) sin(b x₂).
        assert!(basis.pairs().iter().all(|p| p.index.k1 % 2 == 0 && p.index.k2 % 2 == 0));
        assert_eq!(basis.len(), 9);
        for (i, pair) in basis.pairs().iter().enumerate() {
            let (a, b) = (f64::from(pair.index.k1 / 2), f64::from(pair.index.k2 / 2));
            for p in interior_points(t.tile(), 5, i as u64) {
                let expect = (2.0 / PI) * (a * p.x1).sin() * (b * p.x2).sin();
                assert!((basis.eval_mode(i, p).abs() - expect.abs()).abs() < 1e-10);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn folded_symmetry_relation(x in 0.0..1.0f64, y in 0.0..1.0f64, h in 0usize..6, k1 in 1u32..8, k2 in 1u32..8) {
            let t = Tiling::half_equilateral();
            let d = SignVector::half_equilateral();
            let tri = t.tile();
            let p = Point::new(x / sqrt3(), y);
            proptest::prop_assume!(tri.contains_closed(p, 0.0));
            let kk = ModeIndex { k1, k2 };
            let lhs = triangle_eigenfunction_raw(kk, t.motions()[h].apply(p), &t, &d);
            let rhs = d.get(h) * triangle_eigenfunction_raw(kk, p, &t, &d);
            proptest::prop_assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
