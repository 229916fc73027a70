//! Observed space-time energy `∫₀ᵀ∫_{Ω₀}|u|²` with exact time integrals, and
//! extremal constants of the truncated two-sided estimate
//! `c₁(‖u₀‖² + ‖u₁‖²_{H⁻¹}) ≤ ∫₀ᵀ∫_{Ω₀}|u|² ≤ c₂(‖u₀‖² + ‖u₁‖²_{H⁻¹})`.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};

use crate::error::{ObservabilityError, SpectralError};
use crate::geometry::Region;
use crate::quadrature::QuadratureRule;
use crate::spectral::EigenBasis;
use crate::wavesim::WaveState;

/// Default subdivision level of composite rules over pullback regions.
pub const DEFAULT_SUBDIVISION_LEVEL: u32 = 5;

/// `sin(z)/z`
fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 - z * z / 6.0
    } else {
        z.sin() / z
    }
}

/// `∫₀ᵀ cos(xt) dt`
fn int_cos(x: f64, t: f64) -> f64 {
    t * sinc(x * t)
}

/// `∫₀ᵀ sin(xt) dt = (1 − cos xT)/x`
fn int_sin(x: f64, t: f64) -> f64 {
    let half = 0.5 * x * t;
    t * half.sin() * sinc(half)
}

/// `[[∫cos_i cos_j, ∫cos_i sin_j], [∫sin_i cos_j, ∫sin_i sin_j]]` over `(0,T)`,
/// where `cos_i = cos(ω_i t)`.
pub fn time_integral(wi: f64, wj: f64, t: f64) -> Result<Matrix2<f64>, ObservabilityError> {
    if !(wi > 0.0 && wj > 0.0 && wi.is_finite() && wj.is_finite()) {
        return Err(ObservabilityError::Frequency(wi, wj));
    }
    check_horizon(t)?;
    let (dm, sp) = (wi - wj, wi + wj);
    let cc = 0.5 * (int_cos(dm, t) + int_cos(sp, t));
    let ss = 0.5 * (int_cos(dm, t) - int_cos(sp, t));
    // cos a sin b = ½[sin(a+b) − sin(a−b)]
    let cs = 0.5 * (int_sin(sp, t) - int_sin(dm, t));
    let sc = 0.5 * (int_sin(sp, t) + int_sin(dm, t));
    Ok(Matrix2::new(cc, cs, sc, ss))
}

fn check_horizon(t: f64) -> Result<(), ObservabilityError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(ObservabilityError::Horizon(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PullbackWeight {
    /// `m(x) = #{h : K_h x ∈ Ω₀′}`; reproduces the target-side measure.
    Multiplicity,
    /// `1` where some `K_h x ∈ Ω₀′`.
    Indicator,
}

/// Where the solution is observed.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationRegion {
    /// The whole basis domain.
    Full,
    /// Disjoint convex pieces inside the basis domain, integrated by exact
    /// polygon rules.
    Polygons(Region),
    /// A region of the tiling target pulled back to the tile of a folded
    /// basis, integrated by a composite rule with `4^level` cells.
    Pullback { region: Region, weight: PullbackWeight, level: u32 },
}

impl ObservationRegion {
    pub fn pullback(region: Region) -> Self {
        ObservationRegion::Pullback { region, weight: PullbackWeight::Multiplicity, level: DEFAULT_SUBDIVISION_LEVEL }
    }

    /// Quadrature rule for `∫_{Ω₀} f` on the domain of `basis`.
    pub fn rule(&self, basis: &EigenBasis, order: usize) -> Result<QuadratureRule, ObservabilityError> {
        Ok(match self {
            ObservationRegion::Full => QuadratureRule::polygon(basis.domain(), order)?,
            ObservationRegion::Polygons(region) => QuadratureRule::region(region, basis.domain(), order)?,
            ObservationRegion::Pullback { region, weight, level } => {
                let tiling = basis.kind().tiling().ok_or(SpectralError::NotFolded)?;
                if !basis.is_native() {
                    return Err(SpectralError::NotFolded.into());
                }
                let pullback = tiling.pullback(region.clone());
                let weight = *weight;
                QuadratureRule::composite(basis.domain(), *level).reweighted(|x| match weight {
                    PullbackWeight::Multiplicity => pullback.multiplicity(x) as f64,
                    PullbackWeight::Indicator => f64::from(u8::from(pullback.contains(x))),
                })
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSetup {
    pub region: ObservationRegion,
    pub horizon: f64,
    pub space_quad_order: usize,
}

impl ObservationSetup {
    pub fn new(region: ObservationRegion, horizon: f64, space_quad_order: usize) -> Result<Self, ObservabilityError> {
        check_horizon(horizon)?;
        Ok(Self { region, horizon, space_quad_order })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantEstimate {
    pub c1: f64,
    pub c2: f64,
    pub mode_count: usize,
    pub horizon: f64,
}

/// The spatial Gram matrix `G_ij = ∫_{Ω₀} e_i e_j` of a basis, reused for
/// every horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedGram {
    gram: DMatrix<f64>,
    omegas: Vec<f64>,
}

impl ObservedGram {
    pub fn assemble(basis: &EigenBasis, region: &ObservationRegion, order: usize) -> Result<Self, ObservabilityError> {
        let m = basis.len();
        let gram = if region_is_empty(region) {
            DMatrix::zeros(m, m)
        } else {
            let rule = region.rule(basis, order)?;
            basis.gram(&rule)
        };
        Ok(Self { gram: symmetrized(&gram)?, omegas: basis.omegas() })
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn mode_count(&self) -> usize {
        self.omegas.len()
    }

    /// Energy form in the coordinates `v = (c, d/ω)`, in which the norm form
    /// `Σ c² + d²/γ` is the identity.
    pub fn energy_form(&self, horizon: f64) -> Result<DMatrix<f64>, ObservabilityError> {
        check_horizon(horizon)?;
        let m = self.mode_count();
        let mut q = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                let g = self.gram[(i, j)];
                let ti = time_integral(self.omegas[i], self.omegas[j], horizon)?;
                q[(i, j)] = g * ti[(0, 0)];
                q[(i, m + j)] = g * ti[(0, 1)];
                q[(m + i, j)] = g * ti[(1, 0)];
                q[(m + i, m + j)] = g * ti[(1, 1)];
            }
        }
        Ok(q)
    }

    /// `∫₀ᵀ∫_{Ω₀}|u|²` for data `(c, d)`.
    pub fn observed_energy(&self, c: &[f64], d: &[f64], horizon: f64) -> Result<f64, ObservabilityError> {
        let m = self.mode_count();
        if c.len() != m || d.len() != m {
            return Err(SpectralError::LengthMismatch { expected: m, got: c.len().min(d.len()) }.into());
        }
        let q = self.energy_form(horizon)?;
        let v = DMatrix::from_iterator(
            2 * m,
            1,
            c.iter().copied().chain(d.iter().zip(&self.omegas).map(|(d, w)| d / w)),
        );
        Ok((v.transpose() * &q * &v)[(0, 0)].max(0.0))
    }

    pub fn estimate(&self, horizon: f64) -> Result<ConstantEstimate, ObservabilityError> {
        let q = self.energy_form(horizon)?;
        let (c1, c2) = extremal_eigenvalues(q)?;
        Ok(ConstantEstimate { c1, c2, mode_count: self.mode_count(), horizon })
    }
}

fn region_is_empty(region: &ObservationRegion) -> bool {
    match region {
        ObservationRegion::Full => false,
        ObservationRegion::Polygons(r) | ObservationRegion::Pullback { region: r, .. } => r.is_empty(),
    }
}

fn symmetrized(a: &DMatrix<f64>) -> Result<DMatrix<f64>, ObservabilityError> {
    let scale = a.amax().max(1.0);
    let asym = (a - a.transpose()).amax();
    if asym.is_nan() || asym > 1e-8 * scale {
        return Err(ObservabilityError::Asymmetric(asym));
    }
    Ok((a + a.transpose()) * 0.5)
}

/// Smallest and largest eigenvalue of a symmetric PSD form.
fn extremal_eigenvalues(q: DMatrix<f64>) -> Result<(f64, f64), ObservabilityError> {
    let q = symmetrized(&q)?;
    let scale = q.amax();
    let eig = SymmetricEigen::try_new(q, f64::EPSILON, 0).ok_or(ObservabilityError::EigenSolve)?;
    let values = eig.eigenvalues;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ObservabilityError::EigenSolve);
    }
    let min = values.min();
    let max = values.max();
    if min < -1e-9 * scale {
        return Err(ObservabilityError::Indefinite { min, scale });
    }
    Ok((min.max(0.0), max.max(0.0)))
}

/// `∫₀ᵀ∫_{Ω₀}|u|²` for a wave state.
pub fn observed_energy(state: &WaveState<'_>, setup: &ObservationSetup) -> Result<f64, ObservabilityError> {
    let gram = ObservedGram::assemble(state.basis(), &setup.region, setup.space_quad_order)?;
    gram.observed_energy(state.c(), state.d(), setup.horizon)
}

/// Extremal generalized eigenvalues of `Q v = λ B v` on the span of `basis`.
pub fn estimate_constants(basis: &EigenBasis, setup: &ObservationSetup) -> Result<ConstantEstimate, ObservabilityError> {
    ObservedGram::assemble(basis, &setup.region, setup.space_quad_order)?.estimate(setup.horizon)
}

/// Constants for each horizon of an ascending list, sharing one Gram assembly.
pub fn horizon_sweep(
    basis: &EigenBasis,
    region: &ObservationRegion,
    horizons: &[f64],
    space_quad_order: usize,
) -> Result<Vec<ConstantEstimate>, ObservabilityError> {
    if horizons.is_empty() || horizons.iter().any(|t| !(*t > 0.0 && t.is_finite())) || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ObservabilityError::SweepOrder);
    }
    let gram = ObservedGram::assemble(basis, region, space_quad_order)?;
    horizons.iter().map(|&t| gram.estimate(t)).collect()
}
