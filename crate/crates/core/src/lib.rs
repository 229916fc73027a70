//! Tilings of planar domains by rigid motions, folded Dirichlet eigenbases,
//! closed-form spectral wave solutions and truncated observability constants.

pub mod error;
pub mod geometry;
pub mod observability;
pub mod quadrature;
pub mod spectral;
pub mod tiling;
pub mod wavesim;

pub use error::{GeometryError, ObservabilityError, SpectralError, TilingError};
pub use geometry::{ConvexPolygon, Point, Region, RigidMotion};

pub use quadrature::QuadratureRule;
pub use spectral::{build_basis, BasisKind, BasisSpec, EigenBasis, EigenPair, ModeIndex, Provenance};
pub use tiling::{PointFunction, SignVector, Tiling};

pub use wavesim::WaveState;
pub use observability::{ConstantEstimate, ObservationRegion, ObservationSetup, PullbackWeight};
