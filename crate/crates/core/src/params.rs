//! Physical inputs of the coupled-oscillator Hamiltonian
//!
//! ```text
//! H/ħ = ω₁ a₁⁺a₁ + ω₂ a₂⁺a₂ + λ (a₁⁺a₂ + a₁a₂⁺)
//! ```
//!
//! and the normal-mode quantities derived from them. Frequencies and the
//! coupling share one (arbitrary) time unit.

use crate::error::{Error, Result};

/// Bare frequencies and coupling constant.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CouplingParams {
    pub omega1: f64,
    pub omega2: f64,
    pub lambda: f64,
}

impl CouplingParams {
    /// Validated constructor. `lambda = 0` is accepted here; it only fails
    /// later when a mixing angle is requested.
    pub fn new(omega1: f64, omega2: f64, lambda: f64) -> Result<Self> {
        for (field, value) in [("omega1", omega1), ("omega2", omega2), ("lambda", lambda)] {
            if !value.is_finite() {
                return Err(Error::NonFinite { field, value });
            }
        }
        if lambda < 0.0 {
            return Err(Error::NegativeCoupling(lambda));
        }
        Ok(Self { omega1, omega2, lambda })
    }

    /// Resonant oscillators `ω₁ = ω₂ = omega`.
    pub fn resonant(omega: f64, lambda: f64) -> Result<Self> {
        Self::new(omega, omega, lambda)
    }

    pub fn is_decoupled(&self) -> bool {
        self.lambda == 0.0
    }

    /// Mean frequency `(ω₁ + ω₂)/2`.
    pub fn mean_frequency(&self) -> f64 {
        0.5 * (self.omega1 + self.omega2)
    }
}

/// Mixing angle and normal-mode frequencies.
///
/// `c = cos θ`, `s = sin θ` with `θ ∈ [0, π/2]`, so that
/// `a₁' = c a₁ + s a₂` and `a₂' = -s a₁ + c a₂` decouple the Hamiltonian with
/// frequencies `omega1p`, `omega2p`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct MixingParams {
    pub x: f64,
    pub s: f64,
    pub c: f64,
    pub omega1p: f64,
    pub omega2p: f64,
}

impl MixingParams {
    /// `s·c`, the quantity that controls the exchange efficiency.
    pub fn sc(&self) -> f64 {
        self.s * self.c
    }

    /// Half the normal-mode splitting, `(ω₁' - ω₂')/2`.
    pub fn half_splitting(&self) -> f64 {
        0.5 * (self.omega1p - self.omega2p)
    }
}

/// Derives the mixing parameters from the bare ones.
///
/// `x = (ω₁ - ω₂)/(2λ)` and `s² = ½ - x/(2√(x²+1))`, `c² = ½ + x/(2√(x²+1))`.
/// The smaller of `s²`, `c²` is evaluated in the cancellation-free form
/// `1/(2r(r + |x|))`, `r = √(x²+1)`, which is algebraically identical.
pub fn derive_mixing(params: &CouplingParams) -> Result<MixingParams> {
    if params.is_decoupled() {
        return Err(Error::DecoupledSystem);
    }
    let lambda = params.lambda;
    let x = (params.omega1 - params.omega2) / (2.0 * lambda);
    let r = x.hypot(1.0);
    let small = if r.is_finite() { 1.0 / (2.0 * r * (r + x.abs())) } else { 0.0 };
    let (s2, c2) = if x >= 0.0 { (small, 1.0 - small) } else { (1.0 - small, small) };
    let (s, c) = (s2.sqrt(), c2.sqrt());
    let shift = lambda * s / c;
    Ok(MixingParams {
        x,
        s,
        c,
        omega1p: params.omega1 + shift,
        omega2p: params.omega2 - shift,
    })
}

/// The uncoupled limit `s = 0`, `c = 1`, `ωᵢ' = ωᵢ`.
///
/// `x` is reported as `+∞` (or `-∞` when `ω₁ < ω₂`, and `0` when the bare
/// frequencies coincide). Only the rotation and evolution code consume this.
pub fn decoupled_mixing(params: &CouplingParams) -> MixingParams {
    let dw = params.omega1 - params.omega2;
    let x = if dw == 0.0 { 0.0 } else { dw.signum() * f64::INFINITY };
    MixingParams {
        x,
        s: 0.0,
        c: 1.0,
        omega1p: params.omega1,
        omega2p: params.omega2,
    }
}
