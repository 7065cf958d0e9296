//! State-exchange diagnostics: exchange instants, transfer probabilities,
//! reduced density matrices, fidelities and the frequency condition for
//! exact exchange of `C₀|0⟩ + C_N|N⟩`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::EvolutionOperator;
use crate::params::MixingParams;
use crate::state::{Mode, TwoModeState};

/// Amplitudes below this modulus carry no usable phase.
const PHASE_FLOOR: f64 = 1e-12;

/// `τ_k = (s c/λ)(2k + 1)π` for `k = 0..=k_max`.
pub fn exchange_times(mix: &MixingParams, lambda: f64, k_max: usize) -> Result<Vec<f64>> {
    if lambda == 0.0 {
        return Err(Error::DecoupledSystem);
    }
    if lambda < 0.0 {
        return Err(Error::NegativeCoupling(lambda));
    }
    let unit = mix.sc() / lambda * PI;
    Ok((0..=k_max).map(|k| unit * (2 * k + 1) as f64).collect())
}

/// `|C^{0,n}(t)|² / |C^{n,0}(0)|² = |2 s c sin(λt/(2cs))|^{2n}`.
pub fn transfer_probability(mix: &MixingParams, lambda: f64, n: usize, t: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let sc = mix.sc();
    if sc == 0.0 || lambda == 0.0 {
        return 0.0;
    }
    (2.0 * sc * (lambda * t / (2.0 * sc)).sin()).abs().powi(2 * n as i32)
}

/// Single-mode density matrix `ρ_{a,b}` on occupations `0..dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedDensityMatrix {
    pub mode: Mode,
    pub entries: DMatrix<Complex64>,
}

impl ReducedDensityMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, a: usize, b: usize) -> Complex64 {
        self.entries[(a, b)]
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// `max |ρ − ρ†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.entries - self.entries.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Hermitian within 1e-12, unit trace within 1e-10 and positive
    /// semidefinite down to −1e-10.
    pub fn is_physical(&self) -> bool {
        self.hermiticity_defect() < 1e-12
            && (self.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-10
            && self.min_eigenvalue() >= -1e-10
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.entries[(a, a)].re).collect()
    }
}

/// Partial trace over the other mode, e.g. `ρ⁽¹⁾_{a,b} = Σ_j C^{a,j} C*^{b,j}`.
pub fn reduce(state: &TwoModeState, mode: Mode) -> ReducedDensityMatrix {
    let dim = state.n_max() + 1;
    let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
    // the traced-out occupation j pairs slots from different blocks
    let amp = |kept: usize, j: usize| match mode {
        Mode::One => state.amplitude(kept, j),
        Mode::Two => state.amplitude(j, kept),
    };
    for a in 0..dim {
        for b in 0..dim {
            let top = state.n_max() - a.max(b);
            rho[(a, b)] = (0..=top).map(|j| amp(a, j) * amp(b, j).conj()).sum();
        }
    }
    ReducedDensityMatrix { mode, entries: rho }
}

/// Per-quantum factor `e^{−i(ωt + π/2)}` relating exchanged coefficients to
/// the initial ones for resonant oscillators of frequency `omega`.
pub fn resonant_exchange_factor(omega: f64, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, -(omega * t + FRAC_PI_2))
}

/// `max_{a,b} |ρ_after(a,b) − f^a f*^b ρ_before(a,b)|` over the common
/// occupations.
pub fn density_relation_defect(
    after: &ReducedDensityMatrix,
    before: &ReducedDensityMatrix,
    factor: Complex64,
) -> f64 {
    let dim = after.dim().min(before.dim());
    let mut worst = 0.0f64;
    for a in 0..dim {
        for b in 0..dim {
            let predicted = factor.powu(a as u32) * factor.conj().powu(b as u32) * before.get(a, b);
            worst = worst.max((after.get(a, b) - predicted).norm());
        }
    }
    worst
}

/// `|⟨0, φ|Ψ⟩|²`; invariant under a global phase of either argument.
pub fn exchange_fidelity(state_t: &TwoModeState, target_phi: &[Complex64]) -> f64 {
    target_phi
        .iter()
        .enumerate()
        .map(|(n, p)| p.conj() * state_t.amplitude(0, n))
        .sum::<Complex64>()
        .norm_sqr()
}

/// `ω/λ = (4m − N)/N`, the ratio that makes the exchange of
/// `C₀|0⟩ + C_N|N⟩` exact at `τ₀ = π/(2λ)`.
pub fn complete_exchange_ratio(n: usize, m: usize) -> Result<f64> {
    assert!(n >= 1 && m >= 1, "N and m must be positive");
    if 4 * m <= n {
        return Err(Error::NonPositiveRatio { n, m });
    }
    Ok((4 * m - n) as f64 / n as f64)
}

/// Smallest `m` with a positive ratio for the given `N`.
pub fn smallest_positive_order(n: usize) -> usize {
    n / 4 + 1
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ExchangeReport {
    pub time: f64,
    /// `|⟨0,φ|Ψ(t)⟩|²`.
    pub fidelity_exchange: f64,
    /// `max_n | |C^{0,n}(t)| − |C^{n,0}(0)| |`.
    pub statistics_match: f64,
    /// Largest wrap-aware deviation of `arg C^{0,n}(t)` from
    /// `arg[(−i)ⁿ e^{−iω̄nt} C^{n,0}(0)]`, `ω̄ = (ω₁+ω₂)/2`.
    pub phase_defect: f64,
}

/// Mode-1 amplitudes of a `|φ⟩ ⊗ |0⟩` state.
pub fn product_factor(state: &TwoModeState) -> Result<Vec<Complex64>> {
    let n_max = state.n_max();
    for n in 0..=n_max {
        if state.block(n)[1..].iter().any(|z| z.norm() > PHASE_FLOOR) {
            return Err(Error::NotProductState);
        }
    }
    Ok((0..=n_max).map(|n| state.amplitude(n, 0)).collect())
}

/// Evolves a product state to `t` and compares the mode-2 coefficients with
/// the initial mode-1 ones.
pub fn verify_statistics_exchange(state0: &TwoModeState, evo: &EvolutionOperator, t: f64) -> Result<ExchangeReport> {
    let phi = product_factor(state0)?;
    let state_t = evo.evolve(state0, t);
    let omega = evo.params().mean_frequency();
    let mut statistics_match = 0.0f64;
    let mut phase_defect = 0.0f64;
    for (n, &c0) in phi.iter().enumerate() {
        let ct = state_t.amplitude(0, n);
        statistics_match = statistics_match.max((ct.norm() - c0.norm()).abs());
        if ct.norm() > PHASE_FLOOR && c0.norm() > PHASE_FLOOR {
            let predicted = Complex64::new(0.0, -1.0).powu(n as u32)
                * Complex64::from_polar(1.0, -omega * n as f64 * t)
                * c0;
            phase_defect = phase_defect.max(phase_distance(ct.arg(), predicted.arg()));
        }
    }
    Ok(ExchangeReport {
        time: t,
        fidelity_exchange: exchange_fidelity(&state_t, &phi),
        statistics_match,
        phase_defect,
    })
}

/// Grid search followed by golden-section refinement around the best grid
/// point. Ties on the grid resolve to the earliest point.
pub fn maximize_on_window(f: impl Fn(f64) -> f64, t_start: f64, t_end: f64, step: f64) -> (f64, f64) {
    assert!(t_end >= t_start && step > 0.0);
    let steps = ((t_end - t_start) / step).ceil().max(1.0) as usize;
    let h = (t_end - t_start) / steps as f64;
    let (mut best_t, mut best_v) = (t_start, f(t_start));
    for i in 1..=steps {
        let t = t_start + h * i as f64;
        let v = f(t);
        if v > best_v {
            best_t = t;
            best_v = v;
        }
    }
    if h == 0.0 {
        return (best_t, best_v);
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((best_t - h).max(t_start), (best_t + h).min(t_end));
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if b - a <= 1e-15 * b.abs().max(1.0) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    let (t_ref, v_ref) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if v_ref > best_v {
        (t_ref, v_ref)
    } else {
        (best_t, best_v)
    }
}

/// Grid spacing used by [`scan_exchange`]: `π/(50λ)`, or a thousandth of
/// the window for uncoupled oscillators.
pub fn scan_step(lambda: f64, t_start: f64, t_end: f64) -> f64 {
    if lambda > 0.0 {
        PI / (50.0 * lambda)
    } else {
        ((t_end - t_start) / 1000.0).max(f64::MIN_POSITIVE)
    }
}

/// Best exchange instant in `[t_start, t_end]` for the initial state
/// `|φ⟩ ⊗ |0⟩`, returned as `(time, fidelity)`.
pub fn scan_exchange(evo: &EvolutionOperator, state0: &TwoModeState, t_start: f64, t_end: f64) -> Result<(f64, f64)> {
    let phi = product_factor(state0)?;
    let step = scan_step(evo.params().lambda, t_start, t_end);
    Ok(maximize_on_window(
        |t| exchange_fidelity(&evo.evolve(state0, t), &phi),
        t_start,
        t_end,
        step,
    ))
}

/// Fidelity at one closed-form exchange instant.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ExchangeInstant {
    pub k: usize,
    pub time: f64,
    pub fidelity: f64,
    /// Whether the instant is also of the form `τ₀ + 2πj/λ`.
    pub full_period: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstantSurvey {
    pub instants: Vec<ExchangeInstant>,
    /// The full-period instants all reach fidelity 1, and some other `τ_k`
    /// does too.
    pub full_period_strict_subset: bool,
}

/// Evaluates the exchange fidelity at every `τ_k`, `k ≤ k_max`, and
/// compares the exact instants with the sparser family `τ₀ + 2πj/λ`.
pub fn survey_exchange_instants(
    evo: &EvolutionOperator,
    state0: &TwoModeState,
    k_max: usize,
    tol: f64,
) -> Result<InstantSurvey> {
    let phi = product_factor(state0)?;
    let lambda = evo.params().lambda;
    let times = exchange_times(evo.mixing(), lambda, k_max)?;
    let tau0 = times[0];
    let period = 2.0 * PI / lambda;
    let instants: Vec<ExchangeInstant> = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let j = ((t - tau0) / period).round();
            let full_period = (t - (tau0 + j * period)).abs() <= 1e-9 * t.abs().max(1.0);
            ExchangeInstant {
                k,
                time: t,
                fidelity: exchange_fidelity(&evo.evolve(state0, t), &phi),
                full_period,
            }
        })
        .collect();
    let exact = |i: &ExchangeInstant| (i.fidelity - 1.0).abs() <= tol;
    let subset = instants.iter().filter(|i| i.full_period).all(exact);
    let extra = instants.iter().any(|i| !i.full_period && exact(i));
    Ok(InstantSurvey { instants, full_period_strict_subset: subset && extra })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_mixing, CouplingParams};
    use crate::state::{make_product_state, make_swapped_product_state};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn resonant(omega: f64, lambda: f64, n_max: usize) -> EvolutionOperator {
        EvolutionOperator::new(CouplingParams::resonant(omega, lambda).unwrap(), n_max).unwrap()
    }

    #[test]
    fn exchange_time_values() {
        let m = derive_mixing(&CouplingParams::resonant(1.0, 0.5).unwrap()).unwrap();
        let t = exchange_times(&m, 0.5, 2).unwrap();
        assert!((t[0] - PI).abs() < 1e-14);
        assert!((t[2] - 5.0 * PI).abs() < 1e-13);
        let m = derive_mixing(&CouplingParams::resonant(1.0, 3.0).unwrap()).unwrap();
        assert!((exchange_times(&m, 3.0, 0).unwrap()[0] - PI / 6.0).abs() < 1e-15);
        let m = derive_mixing(&CouplingParams::new(2.0, 0.0, 1.0).unwrap()).unwrap();
        let t0 = exchange_times(&m, 1.0, 0).unwrap()[0];
        assert!((t0 - PI / (2.0 * 2f64.sqrt())).abs() < 1e-14);
        assert_eq!(exchange_times(&m, 0.0, 3), Err(Error::DecoupledSystem));
    }

    #[test]
    fn transfer_probability_values() {
        let l = 0.7;
        let m = derive_mixing(&CouplingParams::resonant(1.0, l).unwrap()).unwrap();
        let t0 = exchange_times(&m, l, 0).unwrap()[0];
        for n in 1..6 {
            assert!((transfer_probability(&m, l, n, t0) - 1.0).abs() < 1e-14);
            assert_eq!(transfer_probability(&m, l, n, 0.0), 0.0);
        }
        for x in [0.5, 1.0, 3.0] {
            let m = derive_mixing(&CouplingParams::new(1.0 + x, 1.0 - x, 1.0).unwrap()).unwrap();
            let t0 = exchange_times(&m, 1.0, 0).unwrap()[0];
            assert!((transfer_probability(&m, 1.0, 1, t0) - 1.0 / (1.0 + x * x)).abs() < 1e-14);
        }
    }

    #[test]
    fn reduce_product_state() {
        let phi = [c(0.6, 0.0), c(0.0, 0.8)];
        let st = make_product_state(&phi, 2).unwrap();
        let r1 = reduce(&st, Mode::One);
        let r2 = reduce(&st, Mode::Two);
        for a in 0..2 {
            for b in 0..2 {
                assert!((r1.get(a, b) - phi[a] * phi[b].conj()).norm() < 1e-15);
            }
        }
        assert_eq!(r2.get(0, 0), c(1.0, 0.0));
        assert_eq!(r2.populations()[1..], [0.0, 0.0]);
        assert!(r1.is_physical() && r2.is_physical());
    }

    #[test]
    fn reduce_bell_like_state() {
        let mut st = TwoModeState::zeros(1);
        st.set(1, 0, c(FRAC_1_SQRT_2, 0.0)).unwrap();
        st.set(0, 1, c(FRAC_1_SQRT_2, 0.0)).unwrap();
        let r = reduce(&st, Mode::One);
        assert!((r.get(0, 0).re - 0.5).abs() < 1e-15 && (r.get(1, 1).re - 0.5).abs() < 1e-15);
        assert_eq!(r.get(0, 1), c(0.0, 0.0));
        assert!((r.min_eigenvalue() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fidelity_cases() {
        let phi = [c(0.6, 0.0), c(0.0, 0.8)];
        let swapped = make_swapped_product_state(&phi, 1).unwrap();
        assert!((exchange_fidelity(&swapped, &phi) - 1.0).abs() < 1e-15);
        let rotated = swapped.scaled(Complex64::from_polar(1.0, 1.1));
        assert!((exchange_fidelity(&rotated, &phi) - 1.0).abs() < 1e-15);
        let one = [c(0.0, 0.0), c(1.0, 0.0)];
        let unswapped = make_product_state(&one, 1).unwrap();
        assert_eq!(exchange_fidelity(&unswapped, &one), 0.0);
    }

    #[test]
    fn qubit_exchange_at_ratio_three() {
        let lambda = 0.4;
        let evo = resonant(3.0 * lambda, lambda, 1);
        let phi = [c(0.6, 0.0), c(0.0, 0.8)];
        let st = make_product_state(&phi, 1).unwrap();
        let out = evo.evolve(&st, PI / (2.0 * lambda));
        assert!((exchange_fidelity(&out, &phi) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ratio_values() {
        assert_eq!(complete_exchange_ratio(1, 1), Ok(3.0));
        assert_eq!(complete_exchange_ratio(2, 1), Ok(1.0));
        assert_eq!(complete_exchange_ratio(4, 1), Err(Error::NonPositiveRatio { n: 4, m: 1 }));
        assert_eq!(complete_exchange_ratio(5, smallest_positive_order(5)), Ok(0.6));
        assert_eq!(smallest_positive_order(3), 1);
    }

    #[test]
    fn statistics_exchange_at_first_instant() {
        let (w, l) = (1.3, 0.45);
        let evo = resonant(w, l, 3);
        let phi = [c(0.3, 0.2), c(-0.5, 0.1), c(0.0, 0.6), c(0.4, -0.2)];
        let st = make_product_state(&phi, 3).unwrap();
        let t0 = PI / (2.0 * l);
        let rep = verify_statistics_exchange(&st, &evo, t0).unwrap();
        assert!(rep.statistics_match < 1e-10);
        assert!(rep.phase_defect < 1e-10);
        assert!(rep.fidelity_exchange < 1.0);
        assert_eq!(rep.time, t0);
    }

    #[test]
    fn statistics_report_at_time_zero() {
        let evo = resonant(1.0, 0.3, 2);
        let phi = [c(0.6, 0.0), c(0.48, 0.0), c(0.64, 0.0)];
        let st = make_product_state(&phi, 2).unwrap();
        let rep = verify_statistics_exchange(&st, &evo, 0.0).unwrap();
        // nothing has moved: the mismatch is the largest moved-to-be modulus
        assert!((rep.statistics_match - 0.64).abs() < 1e-12);
        assert_eq!(rep.phase_defect, 0.0);
    }

    #[test]
    fn statistics_exchange_rejects_entangled_input() {
        let evo = resonant(1.0, 0.3, 1);
        let st = TwoModeState::basis(1, 0, 1).unwrap();
        assert_eq!(verify_statistics_exchange(&st, &evo, 1.0), Err(Error::NotProductState));
    }

    #[test]
    fn odd_instants_flip_the_coherence_sign() {
        let (w, l) = (0.8, 0.25);
        let evo = resonant(w, l, 2);
        let phi = [c(0.5, 0.0), c(0.5, 0.5), c(0.0, -0.5)];
        let st = make_product_state(&phi, 2).unwrap();
        let rho1 = reduce(&st, Mode::One);
        let times = exchange_times(evo.mixing(), l, 3).unwrap();
        for (k, &t) in times.iter().enumerate() {
            let rho2 = reduce(&evo.evolve(&st, t), Mode::Two);
            let literal = resonant_exchange_factor(w, t);
            let signed = literal * if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!(density_relation_defect(&rho2, &rho1, signed) < 1e-10, "k={k}");
            let literal_defect = density_relation_defect(&rho2, &rho1, literal);
            if k % 2 == 0 {
                assert!(literal_defect < 1e-10);
            } else {
                assert!(literal_defect > 0.1);
            }
        }
    }

    #[test]
    fn phase_distance_wraps() {
        assert!((phase_distance(PI - 0.01, -PI + 0.01) - 0.02).abs() < 1e-12);
        assert!((phase_distance(0.0, PI) - PI).abs() < 1e-15);
        assert!(phase_distance(7.0, 7.0 - 2.0 * PI) < 1e-12);
    }

    #[test]
    fn golden_section_finds_peak() {
        let (t, v) = maximize_on_window(|t| -(t - 1.2345).powi(2), 0.0, 3.0, 0.1);
        assert!((t - 1.2345).abs() < 1e-7);
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn scan_finds_first_resonant_instant() {
        let l = 0.5;
        let evo = resonant(3.0 * l, l, 1);
        let st = make_product_state(&[c(0.6, 0.0), c(0.8, 0.0)], 1).unwrap();
        let (t, f) = scan_exchange(&evo, &st, 0.0, 2.0 * PI / l).unwrap();
        assert!((f - 1.0).abs() < 1e-10);
        assert!((t - PI / (2.0 * l)).abs() < 1e-4);
    }

    #[test]
    fn fock_instants_survey() {
        let evo = resonant(1.37, 0.3, 3);
        let st = make_product_state(&[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 3).unwrap();
        let survey = survey_exchange_instants(&evo, &st, 4, 1e-9).unwrap();
        assert!(survey.instants.iter().all(|i| (i.fidelity - 1.0).abs() < 1e-9));
        let full: Vec<usize> = survey.instants.iter().filter(|i| i.full_period).map(|i| i.k).collect();
        assert_eq!(full, vec![0, 2, 4]);
        assert!(survey.full_period_strict_subset);
    }
}
