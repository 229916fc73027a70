use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("linear part is not orthogonal (max |AᵀA − I| = {defect:e})")]
    NotOrthogonal { defect: f64 },
    #[error("a polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is not strictly convex and counter-clockwise at vertex {vertex}")]
    NotStrictlyConvex { vertex: usize },
    #[error("at least 2 samples per edge are required, got {0}")]
    TooFewEdgeSamples(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TilingError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("a tiling needs at least one motion")]
    NoMotions,
    #[error("sign entries must be ±1, got {0}")]
    InvalidSign(i64),
    #[error("sign vector has length {got}, tiling has {expected} motions")]
    SignLength { expected: usize, got: usize },
    #[error("tiling has no sign vector attached")]
    MissingSigns,
    #[error("point {0} lies outside the closed domain")]
    OutsideDomain(Point),
    #[error("Monte Carlo validation needs at least 1000 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sign enumeration is limited to 20 motions, tiling has {0}")]
    TooManyMotions(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Tiling(#[from] TilingError),
    #[error("mode indices start at 1, got ({k1}, {k2})")]
    InvalidIndex { k1: u32, k2: u32 },
    #[error("index box must be at least 1×1, got {0}×{1}")]
    EmptyIndexBox(u32, u32),
    #[error("quadrature order must be at least 2, got {0}")]
    QuadratureOrder(usize),
    #[error("every candidate mode was filtered out")]
    EmptyBasis,
    #[error("folding parent must be an axis-aligned rectangle anchored at the origin")]
    ParentNotRectangle,
    #[error("basis is not folded; it has no tiling")]
    NotFolded,
    #[error("coefficient vector has length {got}, basis has {expected} modes")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObservabilityError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Tiling(#[from] TilingError),
    #[error("horizon must be positive and finite, got {0}")]
    Horizon(f64),
    #[error("frequencies must be positive, got ({0}, {1})")]
    Frequency(f64, f64),
    #[error("horizon values must be positive and ascending")]
    SweepOrder,
    #[error("assembled energy form is not symmetric (‖Q − Qᵀ‖ = {0:e})")]
    Asymmetric(f64),
    #[error("energy form is not positive semidefinite (min eigenvalue {min:e}, scale {scale:e})")]
    Indefinite { min: f64, scale: f64 },
    #[error("eigen-solve produced non-finite values")]
    EigenSolve,
}
