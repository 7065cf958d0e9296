//! Self-check batteries behind the `verify` subcommand.
//!
//! Each suite returns one [`CheckResult`] per invariant with the largest
//! residual seen and the threshold it was held to. Parameter and state
//! samples come from a fixed low-discrepancy sequence so reports are
//! reproducible.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_complex::Complex64;

use crate::analysis::{
    complete_exchange_ratio, density_relation_defect, exchange_fidelity, exchange_times, maximize_on_window,
    reduce, resonant_exchange_factor, smallest_positive_order, verify_statistics_exchange,
};
use crate::error::{Error, Result};
use crate::evolution::{annihilator_expectation, EvolutionOperator};
use crate::oracle::{compare_to_analytic, spectrum_deviation};
use crate::params::{derive_mixing, CouplingParams, MixingParams};
use crate::rotation::{
    u_minus_s_block, us_block, us_element, us_first_row, us_last_row, verify_recursions, RotationBackend,
};
use crate::state::{make_product_state, BlockMatrix, Mode, TwoModeState};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Rotation,
    Evolution,
    Oracle,
    Exchange,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Rotation, Suite::Evolution, Suite::Oracle, Suite::Exchange];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Rotation => "rotation",
            Suite::Evolution => "evolution",
            Suite::Oracle => "oracle",
            Suite::Exchange => "exchange",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.residual < self.tolerance
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let verdict = if c.passed() { "PASS" } else { "FAIL" };
            writeln!(out, "{verdict} {}/{} residual={:.3e} tol={:.1e}", self.suite.name(), c.name, c.residual, c.tolerance)
                .unwrap();
        }
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        writeln!(out, "suite {}: {} checks, {} failed", self.suite.name(), self.checks.len(), failed).unwrap();
        out
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Runs one suite. `tol` replaces every default threshold when given.
pub fn verify_suite(name: &str, tol: Option<f64>) -> Result<SuiteReport> {
    let suite: Suite = name.parse()?;
    run_suite(suite, tol)
}

pub fn run_suite(suite: Suite, tol: Option<f64>) -> Result<SuiteReport> {
    let mut checks = match suite {
        Suite::Rotation => rotation_checks(),
        Suite::Evolution => evolution_checks()?,
        Suite::Oracle => oracle_checks()?,
        Suite::Exchange => exchange_checks()?,
    };
    if let Some(t) = tol {
        checks.iter_mut().for_each(|c| c.tolerance = t);
    }
    Ok(SuiteReport { suite, checks })
}

fn check(name: &str, residual: f64, tolerance: f64) -> CheckResult {
    // NaN residuals must fail
    let residual = if residual.is_nan() { f64::INFINITY } else { residual };
    CheckResult { name: name.to_string(), residual, tolerance }
}

/// `frac(i·α_j)` with irrational `α_j`, in `[0, 1)`.
fn sample(i: usize, j: usize) -> f64 {
    const ALPHAS: [f64; 6] = [
        0.618_033_988_749_894_8,
        0.414_213_562_373_095_1,
        0.732_050_807_568_877_2,
        0.236_067_977_499_789_7,
        0.645_751_311_064_590_6,
        0.162_277_660_168_379_3,
    ];
    ((i + 1) as f64 * ALPHAS[j % ALPHAS.len()]).fract()
}

fn mixing_at(x: f64) -> MixingParams {
    derive_mixing(&CouplingParams::new(1.0 + x, 1.0 - x, 1.0).unwrap()).unwrap()
}

const X_GRID: [f64; 7] = [0.0, 0.5, -0.5, 1.0, -1.0, 5.0, -5.0];

fn rotation_checks() -> Vec<CheckResult> {
    let mut unitarity = 0.0f64;
    let mut inverse = 0.0f64;
    let mut backends = 0.0f64;
    let mut recursion = 0.0f64;
    let mut rows = 0.0f64;
    for &x in &X_GRID {
        let mix = mixing_at(x);
        for n in 0..=30 {
            let us = us_block(&mix, n, RotationBackend::ClosedForm);
            unitarity = unitarity.max(us.unitarity_defect());
            inverse = inverse.max(u_minus_s_block(&mix, n).mul(&us).max_abs_diff(&BlockMatrix::identity(n)));
            backends = backends.max(us.max_abs_diff(&us_block(&mix, n, RotationBackend::Recursion)));
            if n >= 1 {
                recursion = recursion.max(verify_recursions(&mix, n).max());
            }
            for l in 0..=n {
                let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
                let first = us_element(&mix, n, 0, n - l, l, RotationBackend::ClosedForm).re;
                let last = us_element(&mix, 0, n, n - l, l, RotationBackend::ClosedForm).re;
                let f = us_first_row(&mix, n, l);
                let g = us_last_row(&mix, n, l);
                if f != 0.0 {
                    rows = rows.max(rel(first, f));
                }
                if g != 0.0 {
                    rows = rows.max(rel(last, g));
                }
            }
        }
    }
    vec![
        check("unitarity", unitarity, 1e-10),
        check("inverse", inverse, 1e-10),
        check("backend_agreement", backends, 1e-10),
        check("recursion_residual", recursion, 1e-10),
        check("special_rows_relative", rows, 1e-12),
    ]
}

/// Normalized state with pseudo-random amplitudes on blocks `0..=n_max`.
fn sampled_state(seed: usize, n_max: usize) -> TwoModeState {
    let mut st = TwoModeState::zeros(n_max);
    let mut i = seed * 97;
    for n in 0..=n_max {
        for l in 0..=n {
            i += 1;
            let z = Complex64::new(sample(i, 0) - 0.5, sample(i, 1) - 0.5);
            st.set(n - l, l, z).unwrap();
        }
    }
    let norm = st.norm();
    st.scaled(Complex64::new(1.0 / norm, 0.0))
}

/// Normalized single-mode amplitudes `φ[0..=n_max]`.
fn sampled_phi(seed: usize, n_max: usize) -> Vec<Complex64> {
    let raw: Vec<Complex64> = (0..=n_max)
        .map(|n| Complex64::new(sample(seed * 31 + n, 2) - 0.5, sample(seed * 31 + n, 3) - 0.5))
        .collect();
    let norm = raw.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
    raw.into_iter().map(|z| z / norm).collect()
}

fn evolution_checks() -> Result<Vec<CheckResult>> {
    let lambda = 0.5;
    let times = [0.0, 0.7, 3.1, 12.9];
    let lambda_t = [0.1, 0.9, 2.5, 7.3, 31.0];
    let mut unitarity = 0.0f64;
    let mut group = 0.0f64;
    let mut closed = 0.0f64;
    let mut picture = 0.0f64;
    let mut norm = 0.0f64;
    for (idx, &x) in X_GRID.iter().enumerate() {
        let params = CouplingParams::new(1.0 + x * lambda, 1.0 - x * lambda, lambda)?;
        let evo = EvolutionOperator::new(params, 20)?;
        for n in 0..=20 {
            for &t in &times {
                unitarity = unitarity.max(evo.ut_block(n, t).unitarity_defect());
            }
            for &lt in &lambda_t {
                let t = lt / lambda;
                closed = closed.max((evo.transfer_amplitude(n, t) - evo.ut_element(0, n, n, 0, t)).norm());
                closed = closed.max((evo.survival_amplitude(n, t) - evo.ut_element(n, 0, n, 0, t)).norm());
            }
        }
        for n in 0..=12 {
            let (t1, t2) = (1.3, 2.9);
            let prod = evo.ut_block(n, t1).mul(&evo.ut_block(n, t2));
            group = group.max(prod.max_abs_diff(&evo.ut_block(n, t1 + t2)));
        }
        let st = sampled_state(idx, 4);
        for &t in &times {
            let out = evo.evolve(&st, t);
            norm = norm.max((out.norm() - 1.0).abs());
            for mode in [Mode::One, Mode::Two] {
                let heis = evo.heisenberg_mode_expectation(&st, mode, t);
                picture = picture.max((heis - annihilator_expectation(&out, mode)).norm());
            }
        }
    }
    Ok(vec![
        check("unitarity", unitarity, 1e-10),
        check("group_property", group, 1e-10),
        check("closed_form_consistency", closed, 1e-10),
        check("picture_equivalence", picture, 1e-10),
        check("norm_conservation", norm, 1e-10),
    ])
}

fn oracle_checks() -> Result<Vec<CheckResult>> {
    let mut deviation = 0.0f64;
    let mut spectrum = 0.0f64;
    for draw in 0..10 {
        let params = CouplingParams::new(
            0.2 + 2.0 * sample(draw, 0),
            0.2 + 2.0 * sample(draw, 1),
            0.05 + sample(draw, 2),
        )?;
        let grid: Vec<f64> = (0..20).map(|i| 25.0 * sample(draw * 20 + i, 3)).collect();
        for n in 0..=12 {
            deviation = deviation.max(compare_to_analytic(&params, n, &grid)?);
            spectrum = spectrum.max(spectrum_deviation(&params, n)?);
        }
    }
    Ok(vec![
        check("analytic_vs_expm", deviation, 1e-9),
        check("spectrum_identity", spectrum, 1e-10),
    ])
}

fn exchange_checks() -> Result<Vec<CheckResult>> {
    let mut statistics = 0.0f64;
    let mut phase = 0.0f64;
    let mut density = 0.0f64;
    for seed in 0..20 {
        let omega = 0.5 + 2.0 * sample(seed, 4);
        let lambda = 0.1 + sample(seed, 5);
        let n_max = 1 + seed % 6;
        let evo = EvolutionOperator::new(CouplingParams::resonant(omega, lambda)?, n_max)?;
        let st = make_product_state(&sampled_phi(seed, n_max), n_max)?;
        let tau0 = exchange_times(evo.mixing(), lambda, 0)?[0];
        let rep = verify_statistics_exchange(&st, &evo, tau0)?;
        statistics = statistics.max(rep.statistics_match);
        phase = phase.max(rep.phase_defect);
        let rho2 = reduce(&evo.evolve(&st, tau0), Mode::Two);
        let rho1 = reduce(&st, Mode::One);
        density = density.max(density_relation_defect(&rho2, &rho1, resonant_exchange_factor(omega, tau0)));
    }

    let mut complete = 0.0f64;
    for (i, n) in [1usize, 2, 3, 5].into_iter().enumerate() {
        let ratio = complete_exchange_ratio(n, smallest_positive_order(n))?;
        let lambda = 0.4;
        let evo = EvolutionOperator::new(CouplingParams::resonant(ratio * lambda, lambda)?, n)?;
        let theta = 0.3 + 0.9 * sample(i, 0);
        let mut phi = vec![Complex64::new(0.0, 0.0); n + 1];
        phi[0] = Complex64::from_polar(theta.cos(), 2.0 * PI * sample(i, 1));
        phi[n] = Complex64::from_polar(theta.sin(), 2.0 * PI * sample(i, 2));
        let st = make_product_state(&phi, n)?;
        let f = exchange_fidelity(&evo.evolve(&st, PI / (2.0 * lambda)), &phi);
        complete = complete.max((f - 1.0).abs());
    }

    let mut detuning = 0.0f64;
    for x in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let lambda = 0.3;
        let evo = EvolutionOperator::new(CouplingParams::new(1.0 + x * lambda, 1.0 - x * lambda, lambda)?, 1)?;
        let period = 2.0 * PI * evo.mixing().sc() / lambda;
        let (_, best) =
            maximize_on_window(|t| evo.ut_element(0, 1, 1, 0, t).norm_sqr(), 0.0, period, PI / (50.0 * lambda));
        detuning = detuning.max((best - 1.0 / (1.0 + x * x)).abs());
    }

    let mut fock = 0.0f64;
    for n in 1..=5 {
        let lambda = 0.35;
        let evo = EvolutionOperator::new(CouplingParams::resonant(0.9 + 0.37 * n as f64, lambda)?, n)?;
        let mut phi = vec![Complex64::new(0.0, 0.0); n + 1];
        phi[n] = Complex64::new(1.0, 0.0);
        let st = make_product_state(&phi, n)?;
        for t in exchange_times(evo.mixing(), lambda, 4)? {
            fock = fock.max((exchange_fidelity(&evo.evolve(&st, t), &phi) - 1.0).abs());
        }
    }

    Ok(vec![
        check("statistics_match", statistics, 1e-10),
        check("phase_defect_first_instant", phase, 1e-10),
        check("reduced_density_relation", density, 1e-10),
        check("complete_exchange_fidelity", complete, 1e-9),
        check("detuning_law", detuning, 1e-10),
        check("fock_exchange_fidelity", fock, 1e-9),
    ])
}
