//! Executes a validated [`Scenario`] and writes its outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use thiserror::Error;

use crate::analysis::{
    exchange_times, reduce, scan_exchange, survey_exchange_instants, transfer_probability,
    verify_statistics_exchange, ExchangeReport,
};
use crate::evolution::EvolutionOperator;
use crate::params::decoupled_mixing;
use crate::scenario::{InitialSpec, OutputKind, Scenario, Schedule, ScenarioError};
use crate::state::{make_product_state, Mode, TwoModeState};
use crate::verify::run_suite;

/// Tolerance for the per-instant norm and unitarity assertions.
const NUMERICAL_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),

    #[error("numerical check failed: {0}")]
    Numerical(String),

    #[error("output error: {0}")]
    Io(#[from] std::io::Error),

    #[error("output error: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Scenario(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) | RunError::Csv(_) => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    /// Largest exchange fidelity over the evaluated instants and the
    /// earliest instant reaching it; `None` for verification runs.
    pub best: Option<(f64, f64)>,
    pub discarded_mass: Option<f64>,
    pub files: Vec<PathBuf>,
    pub line: String,
}

/// Fixed CSV number format: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn describe_initial(init: &InitialSpec) -> String {
    match init {
        InitialSpec::Fock { n } => format!("fock n={n}"),
        InitialSpec::Qubit { n, .. } => format!("qubit n={n}"),
        InitialSpec::Amplitudes { values } => format!("amplitudes len={}", values.len()),
        InitialSpec::Coherent { truncation, .. } => format!("coherent truncation={truncation}"),
    }
}

struct Sample {
    t: f64,
    state: TwoModeState,
    report: ExchangeReport,
}

fn evolve_checked(evo: &EvolutionOperator, st0: &TwoModeState, t: f64) -> Result<Sample, RunError> {
    for n in 0..=st0.n_max() {
        let defect = evo.ut_block(n, t).unitarity_defect();
        if defect.is_nan() || defect >= NUMERICAL_TOL {
            return Err(RunError::Numerical(format!("U(t) block {n} at t={t} deviates from unitarity by {defect:.3e}")));
        }
    }
    let report = verify_statistics_exchange(st0, evo, t).map_err(|e| RunError::Numerical(e.to_string()))?;
    let state = evo.evolve(st0, t);
    let drift = (state.norm() - st0.norm()).abs();
    if drift.is_nan() || drift >= NUMERICAL_TOL {
        return Err(RunError::Numerical(format!("norm drift {drift:.3e} at t={t}")));
    }
    Ok(Sample { t, state, report })
}

fn write_csv(path: &Path, header: Vec<String>, rows: Vec<Vec<f64>>) -> Result<(), RunError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(&header)?;
    for row in rows {
        w.write_record(row.into_iter().map(fmt_f64))?;
    }
    w.flush()?;
    Ok(())
}

fn complex_cols(prefix: &str) -> [String; 2] {
    [format!("{prefix}_re"), format!("{prefix}_im")]
}

pub fn run(scenario: &Scenario, out_dir: &Path) -> Result<RunSummary, RunError> {
    if let Schedule::Verify(suite) = scenario.schedule {
        let report = run_suite(suite, None).map_err(|e| RunError::Numerical(e.to_string()))?;
        let mut files = Vec::new();
        if scenario.outputs.contains(&OutputKind::Report) {
            fs::create_dir_all(out_dir)?;
            let path = out_dir.join("report.txt");
            fs::write(&path, report.to_text())?;
            files.push(path);
        }
        let verdict = if report.passed() { "PASS" } else { "FAIL" };
        let line = format!("suite {}: {verdict} ({} checks)", suite.name(), report.checks.len());
        if !report.passed() {
            return Err(RunError::Numerical(format!("{line}\n{}", report.to_text())));
        }
        return Ok(RunSummary { best: None, discarded_mass: scenario.discarded_mass, files, line });
    }

    let params = scenario.params;
    let evo = if params.is_decoupled() {
        EvolutionOperator::with_mixing(params, decoupled_mixing(&params), scenario.n_max)
    } else {
        EvolutionOperator::new(params, scenario.n_max).map_err(|e| RunError::Numerical(e.to_string()))?
    };
    let mix = *evo.mixing();
    let st0 = make_product_state(&scenario.phi, scenario.n_max).map_err(|e| RunError::Numerical(e.to_string()))?;

    let times = match scenario.schedule {
        Schedule::TimeGrid { .. } => scenario.schedule.grid_times().unwrap(),
        Schedule::ExchangeScan { k_max } => {
            exchange_times(&mix, params.lambda, k_max).map_err(|e| RunError::Numerical(e.to_string()))?
        }
        Schedule::Verify(_) => unreachable!(),
    };
    let samples = times.iter().map(|&t| evolve_checked(&evo, &st0, t)).collect::<Result<Vec<_>, _>>()?;

    // earliest instant attaining the maximum
    let mut best = (samples[0].t, samples[0].report.fidelity_exchange);
    for s in &samples[1..] {
        if s.report.fidelity_exchange > best.1 {
            best = (s.t, s.report.fidelity_exchange);
        }
    }

    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let dim = scenario.n_max + 1;
    for &kind in &scenario.outputs {
        let path = match kind {
            OutputKind::NumberDistribution => {
                let path = out_dir.join("number_distribution.csv");
                let mut header = vec!["t".to_string()];
                for mode in [1, 2] {
                    header.extend((0..dim).map(|n| format!("p{mode}_{n}")));
                }
                let rows = samples
                    .iter()
                    .map(|s| {
                        let mut row = vec![s.t];
                        row.extend(s.state.number_distribution(Mode::One));
                        row.extend(s.state.number_distribution(Mode::Two));
                        row
                    })
                    .collect();
                write_csv(&path, header, rows)?;
                path
            }
            OutputKind::ReducedDensity => {
                let path = out_dir.join("reduced_density.csv");
                let mut header = vec!["t".to_string()];
                for mode in [1, 2] {
                    for a in 0..dim {
                        for b in 0..dim {
                            header.extend(complex_cols(&format!("rho{mode}_{a}_{b}")));
                        }
                    }
                }
                let mut rows = Vec::with_capacity(samples.len());
                for s in &samples {
                    let mut row = vec![s.t];
                    for mode in [Mode::One, Mode::Two] {
                        let rho = reduce(&s.state, mode);
                        if !rho.is_physical() {
                            return Err(RunError::Numerical(format!("reduced density matrix of {mode:?} at t={} is not physical", s.t)));
                        }
                        row.extend(rho.entries.transpose().iter().flat_map(|z| [z.re, z.im]));
                    }
                    rows.push(row);
                }
                write_csv(&path, header, rows)?;
                path
            }
            OutputKind::Fidelity => {
                let path = out_dir.join("fidelity.csv");
                let header = ["t", "fidelity", "statistics_match", "phase_defect"].map(String::from).to_vec();
                let rows = samples
                    .iter()
                    .map(|s| vec![s.t, s.report.fidelity_exchange, s.report.statistics_match, s.report.phase_defect])
                    .collect();
                write_csv(&path, header, rows)?;
                path
            }
            OutputKind::TransferProfile => {
                let path = out_dir.join("transfer_profile.csv");
                let quanta: Vec<usize> = (1..scenario.phi.len()).filter(|&n| scenario.phi[n].norm() > 0.0).collect();
                let mut header = vec!["t".to_string()];
                for &n in &quanta {
                    header.push(format!("transfer_{n}"));
                    header.extend(complex_cols(&format!("c0_{n}")));
                }
                let rows = samples
                    .iter()
                    .map(|s| {
                        let mut row = vec![s.t];
                        for &n in &quanta {
                            let a: Complex64 = s.state.amplitude(0, n);
                            row.extend([transfer_probability(&mix, params.lambda, n, s.t), a.re, a.im]);
                        }
                        row
                    })
                    .collect();
                write_csv(&path, header, rows)?;
                path
            }
            OutputKind::Report => {
                let path = out_dir.join("report.txt");
                let mut text = String::new();
                let unit = scenario.unit.as_deref().unwrap_or("dimensionless");
                writeln!(text, "omega1 = {}", fmt_f64(params.omega1)).unwrap();
                writeln!(text, "omega2 = {}", fmt_f64(params.omega2)).unwrap();
                writeln!(text, "lambda = {}", fmt_f64(params.lambda)).unwrap();
                writeln!(text, "unit = {unit}").unwrap();
                writeln!(text, "x = {}", fmt_f64(mix.x)).unwrap();
                writeln!(text, "s = {}", fmt_f64(mix.s)).unwrap();
                writeln!(text, "c = {}", fmt_f64(mix.c)).unwrap();
                writeln!(text, "omega1p = {}", fmt_f64(mix.omega1p)).unwrap();
                writeln!(text, "omega2p = {}", fmt_f64(mix.omega2p)).unwrap();
                writeln!(text, "n_max = {}", scenario.n_max).unwrap();
                writeln!(text, "initial = {}", describe_initial(&scenario.initial)).unwrap();
                if let Some(m) = scenario.discarded_mass {
                    writeln!(text, "discarded_mass = {}", fmt_f64(m)).unwrap();
                }
                writeln!(text, "# t fidelity statistics_match phase_defect").unwrap();
                for s in &samples {
                    let r = &s.report;
                    writeln!(
                        text,
                        "{} {} {} {}",
                        fmt_f64(s.t),
                        fmt_f64(r.fidelity_exchange),
                        fmt_f64(r.statistics_match),
                        fmt_f64(r.phase_defect)
                    )
                    .unwrap();
                }
                writeln!(text, "max_fidelity = {} at t = {}", fmt_f64(best.1), fmt_f64(best.0)).unwrap();
                if let Schedule::ExchangeScan { k_max } = scenario.schedule {
                    let t_end = *times.last().unwrap() + times[0];
                    let (t, f) = scan_exchange(&evo, &st0, 0.0, t_end).map_err(|e| RunError::Numerical(e.to_string()))?;
                    writeln!(text, "scan_best = {} at t = {}", fmt_f64(f), fmt_f64(t)).unwrap();
                    let survey = survey_exchange_instants(&evo, &st0, k_max, 1e-9)
                        .map_err(|e| RunError::Numerical(e.to_string()))?;
                    for i in &survey.instants {
                        writeln!(text, "tau_{} = {} fidelity = {} full_period = {}", i.k, fmt_f64(i.time), fmt_f64(i.fidelity), i.full_period)
                            .unwrap();
                    }
                    writeln!(text, "full_period_strict_subset = {}", survey.full_period_strict_subset).unwrap();
                }
                fs::write(&path, text)?;
                path
            }
        };
        files.push(path);
    }

    let mut line = format!("max fidelity {} at t = {}", fmt_f64(best.1), fmt_f64(best.0));
    if let Some(m) = scenario.discarded_mass {
        write!(line, " (discarded mass {})", fmt_f64(m)).unwrap();
    }
    Ok(RunSummary { best: Some(best), discarded_mass: scenario.discarded_mass, files, line })
}

/// Parses, validates and runs the scenario at `path`.
pub fn run_file(path: &Path, out_dir: &Path) -> Result<RunSummary, RunError> {
    let scenario = Scenario::from_path(path)?;
    run(&scenario, out_dir)
}
