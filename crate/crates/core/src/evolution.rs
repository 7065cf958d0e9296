//! Exact time evolution in the bare Fock basis.
//!
//! Within the block of `n` quanta,
//!
//! ```text
//! U(t)^{n₁,n₂}_{m₁,m₂} = Σ_{k₁+k₂=n} e^{−i(k₁ω₁'+k₂ω₂')t} (U₋ₛ)^{n₁,n₂}_{k₁,k₂} (U₋ₛ)^{m₁,m₂}_{k₁,k₂}
//! ```
//!
//! and all elements between different blocks vanish. The rotation blocks are
//! computed once at construction; each time evaluation only applies the
//! diagonal phases.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;
use crate::params::{derive_mixing, CouplingParams, MixingParams};
use crate::rotation::u_minus_s_block;
use crate::state::{BlockMatrix, Mode, TwoModeState};

fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// Normal-mode energies `k₁ω₁' + k₂ω₂'` for slot `j ↦ (n − j, j)`.
fn block_energies(mix: &MixingParams, n_total: usize) -> Vec<f64> {
    (0..=n_total)
        .map(|j| (n_total - j) as f64 * mix.omega1p + j as f64 * mix.omega2p)
        .collect()
}

#[derive(Clone, Debug)]
struct PreparedBlock {
    rotation: BlockMatrix,
    energies: Vec<f64>,
}

impl PreparedBlock {
    fn new(mix: &MixingParams, n_total: usize) -> Self {
        Self {
            rotation: u_minus_s_block(mix, n_total),
            energies: block_energies(mix, n_total),
        }
    }
}

/// The evolution operator for fixed couplings, with rotation blocks
/// materialized for `0..=n_max`. Blocks beyond `n_max` are computed on
/// demand and not cached.
#[derive(Clone, Debug)]
pub struct EvolutionOperator {
    params: CouplingParams,
    mix: MixingParams,
    blocks: Vec<PreparedBlock>,
}

impl EvolutionOperator {
    pub fn new(params: CouplingParams, n_max: usize) -> Result<Self> {
        let mix = derive_mixing(&params)?;
        Ok(Self::with_mixing(params, mix, n_max))
    }

    /// Uses the given mixing parameters as-is, e.g. the uncoupled limit
    /// from [`crate::params::decoupled_mixing`].
    pub fn with_mixing(params: CouplingParams, mix: MixingParams, n_max: usize) -> Self {
        let blocks = (0..=n_max).map(|n| PreparedBlock::new(&mix, n)).collect();
        Self { params, mix, blocks }
    }

    pub fn params(&self) -> &CouplingParams {
        &self.params
    }

    pub fn mixing(&self) -> &MixingParams {
        &self.mix
    }

    pub fn n_max(&self) -> usize {
        self.blocks.len() - 1
    }

    fn with_block<R>(&self, n_total: usize, f: impl FnOnce(&PreparedBlock) -> R) -> R {
        match self.blocks.get(n_total) {
            Some(b) => f(b),
            None => f(&PreparedBlock::new(&self.mix, n_total)),
        }
    }

    /// `U(t)` restricted to the block of `n_total` quanta.
    pub fn ut_block(&self, n_total: usize, t: f64) -> BlockMatrix {
        self.with_block(n_total, |b| {
            let w = &b.rotation.entries;
            let phases: Vec<Complex64> = b.energies.iter().map(|e| cis(-e * t)).collect();
            let dim = n_total + 1;
            let scaled = DMatrix::from_fn(dim, dim, |i, k| w[(i, k)] * phases[k]);
            BlockMatrix::new(n_total, scaled * w.transpose())
        })
    }

    /// Single element of `U(t)`, by the explicit sum over normal-mode states.
    pub fn ut_element(&self, n1: usize, n2: usize, m1: usize, m2: usize, t: f64) -> Complex64 {
        let n = n1 + n2;
        if n != m1 + m2 {
            return Complex64::new(0.0, 0.0);
        }
        self.with_block(n, |b| {
            let w = &b.rotation.entries;
            (0..=n).map(|k| cis(-b.energies[k] * t) * w[(n2, k)] * w[(m2, k)]).sum()
        })
    }

    /// `λ/(2cs)`, which equals `(ω₁' − ω₂')/2`; the latter is used in the
    /// uncoupled limit where `λ/(cs)` is `0/0`.
    fn half_rate(&self) -> f64 {
        let sc = self.mix.sc();
        if self.params.lambda > 0.0 && sc > 0.0 {
            self.params.lambda / (2.0 * sc)
        } else {
            self.mix.half_splitting()
        }
    }

    /// `U(t)^{0,n}_{n,0} = e^{−i(ω₁+ω₂)nt/2} (−2i s c sin(λt/(2cs)))ⁿ`.
    pub fn transfer_amplitude(&self, n: usize, t: f64) -> Complex64 {
        let base = Complex64::new(0.0, -2.0 * self.mix.sc() * (self.half_rate() * t).sin());
        cis(-self.params.mean_frequency() * n as f64 * t) * base.powu(n as u32)
    }

    /// `U(t)^{n,0}_{n,0} = e^{−i(ω₁+ω₂)nt/2} (c² e^{−iλt/(2cs)} + s² e^{iλt/(2cs)})ⁿ`.
    pub fn survival_amplitude(&self, n: usize, t: f64) -> Complex64 {
        let (s, c) = (self.mix.s, self.mix.c);
        let h = self.half_rate() * t;
        let base = c * c * cis(-h) + s * s * cis(h);
        cis(-self.params.mean_frequency() * n as f64 * t) * base.powu(n as u32)
    }

    /// Applies `U(t)` block by block. Blocks beyond the operator's `n_max`
    /// are handled on the fly.
    pub fn evolve(&self, state: &TwoModeState, t: f64) -> TwoModeState {
        let mut out = state.clone();
        for n in 0..=state.n_max() {
            let amps = state.block(n);
            if amps.iter().all(|z| z.norm_sqr() == 0.0) {
                continue;
            }
            let evolved = self.ut_block(n, t).apply(amps);
            out.block_mut(n).copy_from_slice(&evolved);
        }
        out
    }

    /// `⟨a_mode(t)⟩` from the Heisenberg-picture solution
    ///
    /// ```text
    /// a₁(t) = (c²e^{−iω₁'t} + s²e^{−iω₂'t}) a₁ + cs (e^{−iω₁'t} − e^{−iω₂'t}) a₂
    /// a₂(t) = (c²e^{−iω₂'t} + s²e^{−iω₁'t}) a₂ + cs (e^{−iω₁'t} − e^{−iω₂'t}) a₁
    /// ```
    ///
    /// applied to the initial expectations `⟨a₁(0)⟩`, `⟨a₂(0)⟩`.
    pub fn heisenberg_mode_expectation(&self, state0: &TwoModeState, mode: Mode, t: f64) -> Complex64 {
        let (s, c) = (self.mix.s, self.mix.c);
        let e1 = cis(-self.mix.omega1p * t);
        let e2 = cis(-self.mix.omega2p * t);
        let a1 = annihilator_expectation(state0, Mode::One);
        let a2 = annihilator_expectation(state0, Mode::Two);
        let cross = c * s * (e1 - e2);
        match mode {
            Mode::One => (c * c * e1 + s * s * e2) * a1 + cross * a2,
            Mode::Two => (c * c * e2 + s * s * e1) * a2 + cross * a1,
        }
    }
}

/// `⟨ψ|a_mode|ψ⟩` by the ladder rule, e.g. `Σ √n₁ C*^{n₁−1,n₂} C^{n₁,n₂}` for
/// mode 1.
pub fn annihilator_expectation(state: &TwoModeState, mode: Mode) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 1..=state.n_max() {
        let (upper, lower) = (state.block(n), state.block(n - 1));
        for (l, &z) in upper.iter().enumerate() {
            let (occ, lowered) = match mode {
                Mode::One if l < n => (n - l, l),
                Mode::Two if l >= 1 => (l, l - 1),
                _ => continue,
            };
            acc += (occ as f64).sqrt() * lower[lowered].conj() * z;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::decoupled_mixing;
    use crate::state::make_product_state;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn op(w1: f64, w2: f64, l: f64, n_max: usize) -> EvolutionOperator {
        EvolutionOperator::new(CouplingParams::new(w1, w2, l).unwrap(), n_max).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn vacuum_is_stationary() {
        let evo = op(1.3, 0.7, 0.2, 3);
        for t in [0.0, 1.0, 17.5] {
            assert!(close(evo.ut_element(0, 0, 0, 0, t), Complex64::new(1.0, 0.0), 1e-15));
            let st = evo.evolve(&TwoModeState::vacuum(3), t);
            assert!(close(st.amplitude(0, 0), Complex64::new(1.0, 0.0), 1e-15));
        }
    }

    #[test]
    fn identity_at_time_zero() {
        let evo = op(1.3, 0.7, 0.2, 6);
        for n in 0..=6 {
            assert!(evo.ut_block(n, 0.0).max_abs_diff(&BlockMatrix::identity(n)) < 1e-12);
        }
        assert_eq!(evo.ut_element(2, 1, 1, 1, 0.0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn resonant_single_quantum_closed_forms() {
        let (w, l) = (2.0, 0.3);
        let evo = op(w, w, l, 1);
        assert!((evo.mixing().s - FRAC_1_SQRT_2).abs() < 1e-15);
        for t in [0.0, 0.4, 3.3, 10.0] {
            let transfer = Complex64::new(0.0, -1.0) * cis(-w * t) * (l * t).sin();
            let survival = cis(-w * t) * (l * t).cos();
            assert!(close(evo.transfer_amplitude(1, t), transfer, 1e-14));
            assert!(close(evo.survival_amplitude(1, t), survival, 1e-14));
            assert!(close(evo.ut_element(0, 1, 1, 0, t), transfer, 1e-12));
            let p = evo.transfer_amplitude(1, t).norm_sqr() + evo.survival_amplitude(1, t).norm_sqr();
            assert!((p - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_forms_match_generic_sum() {
        let evo = op(1.2, 0.8, 0.2, 6);
        assert!((evo.mixing().x - 1.0).abs() < 1e-14);
        for n in 0..=6 {
            for t in [0.0, 1.0, 7.7] {
                assert!(close(evo.transfer_amplitude(n, t), evo.ut_element(0, n, n, 0, t), 1e-12));
                assert!(close(evo.survival_amplitude(n, t), evo.ut_element(n, 0, n, 0, t), 1e-12));
            }
        }
        assert_eq!(evo.transfer_amplitude(3, 0.0), Complex64::new(0.0, 0.0));
        assert!(close(evo.survival_amplitude(3, 0.0), Complex64::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn single_quantum_moves_to_other_mode() {
        let l = 0.25;
        let evo = op(1.0, 1.0, l, 1);
        let st = TwoModeState::basis(1, 1, 0).unwrap();
        let out = evo.evolve(&st, PI / (2.0 * l));
        assert!((out.amplitude(0, 1).norm() - 1.0).abs() < 1e-14);
        assert!(out.amplitude(1, 0).norm() < 1e-14);
    }

    #[test]
    fn evolve_preserves_norm_and_blocks() {
        let evo = op(0.9, 1.4, 0.6, 5);
        let mut st = TwoModeState::zeros(5);
        st.set(2, 1, Complex64::new(0.3, 0.1)).unwrap();
        st.set(0, 5, Complex64::new(-0.2, 0.7)).unwrap();
        st.set(1, 0, Complex64::new(0.5, 0.0)).unwrap();
        let st = st.scaled(Complex64::new(1.0 / st.norm(), 0.0));
        let out = evo.evolve(&st, 2.75);
        assert!((out.norm() - 1.0).abs() < 1e-12);
        for n in 0..=5 {
            let before: f64 = st.block(n).iter().map(|z| z.norm_sqr()).sum();
            let after: f64 = out.block(n).iter().map(|z| z.norm_sqr()).sum();
            assert!((before - after).abs() < 1e-12, "block {n}");
        }
    }

    #[test]
    fn blocks_beyond_cache_are_computed() {
        let cached = op(1.1, 0.9, 0.4, 8);
        let lazy = op(1.1, 0.9, 0.4, 0);
        assert!(cached.ut_block(8, 1.3).max_abs_diff(&lazy.ut_block(8, 1.3)) < 1e-15);
    }

    #[test]
    fn heisenberg_simple_superposition() {
        let evo = op(1.0, 1.5, 0.3, 1);
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let st = make_product_state(&[h, h], 1).unwrap();
        assert!(close(annihilator_expectation(&st, Mode::One), Complex64::new(0.5, 0.0), 1e-15));
        assert_eq!(annihilator_expectation(&st, Mode::Two), Complex64::new(0.0, 0.0));
        let m = *evo.mixing();
        for t in [0.0, 0.8, 5.0] {
            let expect = 0.5 * (m.c * m.c * cis(-m.omega1p * t) + m.s * m.s * cis(-m.omega2p * t));
            let heis = evo.heisenberg_mode_expectation(&st, Mode::One, t);
            assert!(close(heis, expect, 1e-15));
            let schr = annihilator_expectation(&evo.evolve(&st, t), Mode::One);
            assert!(close(heis, schr, 1e-12));
        }
    }

    #[test]
    fn vacuum_heisenberg() {
        let evo = op(1.0, 1.0, 0.3, 2);
        let v = TwoModeState::vacuum(2);
        assert_eq!(evo.heisenberg_mode_expectation(&v, Mode::Two, 1.7), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn decoupled_evolution_only_phases() {
        let p = CouplingParams::new(1.0, 2.0, 0.0).unwrap();
        let evo = EvolutionOperator::with_mixing(p, decoupled_mixing(&p), 3);
        let t = 0.9;
        assert_eq!(evo.transfer_amplitude(2, t).norm(), 0.0);
        assert!(close(evo.ut_element(2, 1, 2, 1, t), cis(-(2.0 * 1.0 + 2.0) * t), 1e-14));
        assert!(close(evo.survival_amplitude(1, t), cis(-t), 1e-14));
    }
}
