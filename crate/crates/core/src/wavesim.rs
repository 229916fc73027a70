//! Closed-form modal evolution of `u_tt = Δu` with Dirichlet conditions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{SpectralError, TilingError};
use crate::geometry::{ConvexPolygon, Point, DEFAULT_BOUNDARY_TOL};
use crate::spectral::{coefficients, EigenBasis, ModalField};
use crate::tiling::PointFunction;

/// Initial data `u₀ = Σ c_k e_k`, `u₁ = Σ d_k e_k` in a unit-norm basis.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState<'a> {
    basis: &'a EigenBasis,
    c: Vec<f64>,
    d: Vec<f64>,
}

impl<'a> WaveState<'a> {
    pub fn new(basis: &'a EigenBasis, c: Vec<f64>, d: Vec<f64>) -> Result<Self, SpectralError> {
        for v in [&c, &d] {
            if v.len() != basis.len() {
                return Err(SpectralError::LengthMismatch { expected: basis.len(), got: v.len() });
            }
        }
        Ok(Self { basis, c, d })
    }

    /// `u₀ = e_i`, `u₁ = 0`.
    pub fn single_mode(basis: &'a EigenBasis, i: usize) -> Self {
        let mut c = vec![0.0; basis.len()];
        c[i] = 1.0;
        Self { basis, c, d: vec![0.0; basis.len()] }
    }

    /// Reproducible data on the first `modes` modes: `c_k` uniform in
    /// `(−1, 1)` and `d_k = ω_k·s_k` with `s_k` uniform in `(−1, 1)`, so both
    /// halves of the norm carry comparable weight.
    pub fn seeded(basis: &'a EigenBasis, modes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = basis.len();
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        for (i, pair) in basis.pairs().iter().enumerate().take(modes) {
            c[i] = rng.random_range(-1.0..1.0);
            d[i] = pair.omega() * rng.random_range(-1.0..1.0);
        }
        Self { basis, c, d }
    }

    /// Projects point functions onto the basis.
    pub fn from_functions<F0, F1>(
        basis: &'a EigenBasis,
        u0: &F0,
        u1: &F1,
        quad_order: usize,
    ) -> Result<Self, SpectralError>
    where
        F0: PointFunction + ?Sized,
        F1: PointFunction + ?Sized,
    {
        let c = coefficients(u0, basis, quad_order)?;
        let d = coefficients(u1, basis, quad_order)?;
        Ok(Self { basis, c, d })
    }

    pub fn basis(&self) -> &'a EigenBasis {
        self.basis
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            basis: self.basis,
            c: self.c.iter().map(|x| s * x).collect(),
            d: self.d.iter().map(|x| s * x).collect(),
        }
    }

    /// `(u_k(t), u_k′(t))` with `u_k(t) = c_k cos ω_k t + (d_k/ω_k) sin ω_k t`.
    pub fn evolve_coefficients(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let mut value = Vec::with_capacity(self.c.len());
        let mut velocity = Vec::with_capacity(self.c.len());
        for ((pair, c), d) in self.basis.pairs().iter().zip(&self.c).zip(&self.d) {
            let w = pair.omega();
            let (s, co) = (w * t).sin_cos();
            value.push(c * co + d / w * s);
            velocity.push(-c * w * s + d * co);
        }
        (value, velocity)
    }

    /// `u(t, p) = Σ_k u_k(t) e_k(p)`. The modes are entire, so `p` may lie
    /// outside the basis domain.
    pub fn evaluate_solution(&self, t: f64, p: Point) -> f64 {
        let (value, _) = self.evolve_coefficients(t);
        let mut modes = vec![0.0; self.basis.len()];
        self.basis.eval_all(p, &mut modes);
        modes.iter().zip(&value).map(|(e, u)| e * u).sum()
    }

    /// `‖u₀‖²_{L²} = Σ c_k²`
    pub fn l2_norm_sq(&self) -> f64 {
        self.c.iter().map(|c| c * c).sum()
    }

    /// `‖u₁‖²_{H⁻¹} = Σ d_k²/γ_k`
    pub fn hminus1_norm_sq(&self) -> f64 {
        self.d.iter().zip(self.basis.pairs()).map(|(d, p)| d * d / p.eigenvalue).sum()
    }

    /// `Σ_k u_k(t)² ω_k² + u_k′(t)²`
    pub fn total_energy(&self, t: f64) -> f64 {
        let (value, velocity) = self.evolve_coefficients(t);
        value
            .iter()
            .zip(&velocity)
            .zip(self.basis.pairs())
            .map(|((u, v), p)| u * u * p.eigenvalue + v * v)
            .sum()
    }

    /// Data `(𝓟_δu₀, 𝓟_δu₁)` on the tiling target in tile-normalized
    /// coordinates: coefficients `N c_k`, `N d_k` against `target`, which must
    /// be `self.basis().on_target()`.
    pub fn prolonged<'b>(&self, target: &'b EigenBasis) -> Result<WaveState<'b>, SpectralError> {
        self.check_target(target)?;
        let n = self.tiling_len()? as f64;
        Ok(WaveState {
            basis: target,
            c: self.c.iter().map(|x| n * x).collect(),
            d: self.d.iter().map(|x| n * x).collect(),
        })
    }

    /// Same data as [`prolonged`](Self::prolonged), with the coefficients
    /// `⟨𝓟_δu_i, e_k⟩_{Ω′}` computed by quadrature of the pointwise
    /// prolongation over the target.
    pub fn prolonged_by_quadrature<'b>(
        &self,
        target: &'b EigenBasis,
        quad_order: usize,
    ) -> Result<WaveState<'b>, SpectralError> {
        self.check_target(target)?;
        let tiling = self.basis.kind().tiling().ok_or(SpectralError::NotFolded)?;
        let signs = tiling.require_signs()?;
        let u0 = ModalField::new(self.basis, self.c.clone())?;
        let u1 = ModalField::new(self.basis, self.d.clone())?;
        let p0 = tiling.prolong(&u0, signs)?;
        let p1 = tiling.prolong(&u1, signs)?;
        WaveState::from_functions(target, &p0, &p1, quad_order)
    }

    /// `u(t, ·)` as a point function on the basis domain.
    pub fn at_time(&self, t: f64) -> SolutionField<'_> {
        let (value, _) = self.evolve_coefficients(t);
        SolutionField { basis: self.basis, value }
    }

    fn tiling_len(&self) -> Result<usize, SpectralError> {
        Ok(self.basis.kind().tiling().ok_or(SpectralError::NotFolded)?.len())
    }

    fn check_target(&self, target: &EigenBasis) -> Result<(), SpectralError> {
        let tiling = self.basis.kind().tiling().ok_or(SpectralError::NotFolded)?;
        if target.pairs() != self.basis.pairs() || target.domain() != tiling.target() {
            return Err(SpectralError::NotFolded);
        }
        Ok(())
    }
}

/// A solution snapshot `u(t, ·)`.
#[derive(Debug, Clone)]
pub struct SolutionField<'a> {
    basis: &'a EigenBasis,
    value: Vec<f64>,
}

impl SolutionField<'_> {
    pub fn eval_anywhere(&self, p: Point) -> f64 {
        let mut modes = vec![0.0; self.basis.len()];
        self.basis.eval_all(p, &mut modes);
        modes.iter().zip(&self.value).map(|(e, u)| e * u).sum()
    }
}

impl PointFunction for SolutionField<'_> {
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
