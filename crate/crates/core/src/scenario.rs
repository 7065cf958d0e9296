//! Scenario files for the command-line front end.
//!
//! A scenario is a TOML document. Top-level keys must precede the tables:
//!
//! ```toml
//! n_max = 1                         # optional; defaults to the initial support
//! outputs = ["fidelity", "report"]
//!
//! [params]
//! omega1 = 3.0
//! omega2 = 3.0
//! lambda = 1.0
//! unit = "rad/ns"                   # optional label, not interpreted
//!
//! [initial]
//! kind = "qubit"                    # fock | qubit | amplitudes | coherent
//! c0 = 0.6                          # complex values: number or [re, im]
//! cn = 0.8
//! n = 1
//!
//! [schedule]
//! kind = "exchange_scan"            # time_grid | exchange_scan | verify
//! k_max = 4
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;
use thiserror::Error;

use crate::error::Error;
use crate::params::CouplingParams;
use crate::verify::Suite;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario file: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Parse(#[from] toml::de::Error),

    #[error("invalid `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

impl ScenarioError {
    fn invalid(field: &'static str, message: impl ToString) -> Self {
        ScenarioError::Invalid { field, message: message.to_string() }
    }
}

/// A complex number written either as a bare real or as `[re, im]`.
#[derive(Copy, Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexValue> for Complex64 {
    fn from(v: ComplexValue) -> Self {
        match v {
            ComplexValue::Real(re) => Complex64::new(re, 0.0),
            ComplexValue::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub omega1: f64,
    pub omega2: f64,
    pub lambda: f64,
    #[serde(default)]
    pub unit: Option<String>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Fock {
        n: usize,
    },
    Qubit {
        c0: ComplexValue,
        cn: ComplexValue,
        n: usize,
    },
    Amplitudes {
        values: Vec<ComplexValue>,
    },
    /// Exploratory: a truncated coherent state `|α⟩`.
    Coherent {
        alpha: ComplexValue,
        truncation: usize,
        #[serde(default)]
        max_discarded: Option<f64>,
    },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    TimeGrid { t_start: f64, t_end: f64, steps: usize },
    ExchangeScan { k_max: usize },
    Verify { suite: String },
}

#[derive(Copy, Clone, Debug, Deserialize, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    NumberDistribution,
    ReducedDensity,
    Fidelity,
    TransferProfile,
    Report,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub outputs: Vec<OutputKind>,
    pub params: ParamsSection,
    pub initial: InitialSpec,
    pub schedule: ScheduleSpec,
}

pub const DEFAULT_MAX_DISCARDED: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Schedule {
    /// `steps + 1` equally spaced instants from `t_start` to `t_end`.
    TimeGrid { t_start: f64, t_end: f64, steps: usize },
    ExchangeScan { k_max: usize },
    Verify(Suite),
}

impl Schedule {
    pub fn grid_times(&self) -> Option<Vec<f64>> {
        match *self {
            Schedule::TimeGrid { t_start, t_end, steps } => {
                Some((0..=steps).map(|i| t_start + (t_end - t_start) * i as f64 / steps as f64).collect())
            }
            _ => None,
        }
    }
}

/// A validated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub params: CouplingParams,
    pub unit: Option<String>,
    pub initial: InitialSpec,
    /// Normalized mode-1 amplitudes of the initial product state.
    pub phi: Vec<Complex64>,
    /// Probability dropped by truncating a coherent state.
    pub discarded_mass: Option<f64>,
    pub n_max: usize,
    pub schedule: Schedule,
    pub outputs: Vec<OutputKind>,
}

/// Truncated coherent-state amplitudes `e^{−|α|²/2} αⁿ/√n!`, `n ≤ truncation`,
/// and the discarded tail probability.
pub fn coherent_amplitudes(alpha: Complex64, truncation: usize) -> (Vec<Complex64>, f64) {
    let mut amp = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    let mut kept = Vec::with_capacity(truncation + 1);
    kept.push(amp);
    for n in 1..=truncation {
        amp = amp * alpha / (n as f64).sqrt();
        kept.push(amp);
    }
    let mean = alpha.norm_sqr();
    let mut tail = 0.0;
    let mut n = truncation + 1;
    loop {
        amp = amp * alpha / (n as f64).sqrt();
        let p = amp.norm_sqr();
        tail += p;
        // past the peak the terms fall off geometrically
        if (n as f64 > mean && (p == 0.0 || p <= tail * 1e-17)) || n > truncation + 100_000 {
            break;
        }
        n += 1;
    }
    (kept, tail)
}

fn finite(field: &'static str, v: f64) -> Result<f64, ScenarioError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ScenarioError::invalid(field, format!("must be finite, got {v}")))
    }
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text)?;
        Self::validate(file)
    }

    pub fn validate(file: ScenarioFile) -> Result<Self, ScenarioError> {
        let p = &file.params;
        let params = CouplingParams::new(p.omega1, p.omega2, p.lambda).map_err(|e| match e {
            Error::NonFinite { field: "omega1", .. } => ScenarioError::invalid("params.omega1", e),
            Error::NonFinite { field: "omega2", .. } => ScenarioError::invalid("params.omega2", e),
            _ => ScenarioError::invalid("params.lambda", e),
        })?;

        let mut discarded_mass = None;
        let raw: Vec<Complex64> = match &file.initial {
            InitialSpec::Fock { n } => {
                let mut v = vec![Complex64::new(0.0, 0.0); n + 1];
                v[*n] = Complex64::new(1.0, 0.0);
                v
            }
            InitialSpec::Qubit { c0, cn, n } => {
                if *n == 0 {
                    return Err(ScenarioError::invalid("initial.n", "must be at least 1"));
                }
                let mut v = vec![Complex64::new(0.0, 0.0); n + 1];
                v[0] = (*c0).into();
                v[*n] = (*cn).into();
                v
            }
            InitialSpec::Amplitudes { values } => {
                if values.is_empty() {
                    return Err(ScenarioError::invalid("initial.values", "must not be empty"));
                }
                values.iter().map(|&z| z.into()).collect()
            }
            InitialSpec::Coherent { alpha, truncation, max_discarded } => {
                let threshold = finite("initial.max_discarded", max_discarded.unwrap_or(DEFAULT_MAX_DISCARDED))?;
                let (amps, tail) = coherent_amplitudes((*alpha).into(), *truncation);
                if tail > threshold {
                    return Err(ScenarioError::invalid(
                        "initial.truncation",
                        format!("discarded probability {tail:.3e} exceeds {threshold:.1e}"),
                    ));
                }
                discarded_mass = Some(tail);
                amps
            }
        };
        if raw.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(ScenarioError::invalid("initial", "amplitudes must be finite"));
        }
        let norm = raw.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(ScenarioError::invalid("initial", Error::ZeroVector));
        }
        // trailing zeros do not count towards the support
        let support = raw.iter().rposition(|z| z.norm_sqr() > 0.0).unwrap_or(0);
        let phi: Vec<Complex64> = raw[..=support].iter().map(|z| z / norm).collect();

        let n_max = file.n_max.unwrap_or(support);
        if n_max < support {
            return Err(ScenarioError::invalid(
                "n_max",
                Error::TruncationTooSmall { needed: support, n_max },
            ));
        }

        let schedule = match &file.schedule {
            &ScheduleSpec::TimeGrid { t_start, t_end, steps } => {
                finite("schedule.t_start", t_start)?;
                finite("schedule.t_end", t_end)?;
                if steps < 1 {
                    return Err(ScenarioError::invalid("schedule.steps", "must be at least 1"));
                }
                if t_end < t_start {
                    return Err(ScenarioError::invalid("schedule.t_end", "must not precede t_start"));
                }
                Schedule::TimeGrid { t_start, t_end, steps }
            }
            &ScheduleSpec::ExchangeScan { k_max } => {
                if params.is_decoupled() {
                    return Err(ScenarioError::invalid("params.lambda", "exchange_scan needs lambda > 0"));
                }
                Schedule::ExchangeScan { k_max }
            }
            ScheduleSpec::Verify { suite } => {
                Schedule::Verify(suite.parse().map_err(|e| ScenarioError::invalid("schedule.suite", e))?)
            }
        };

        let mut outputs = file.outputs.clone();
        outputs.sort();
        outputs.dedup();

        Ok(Scenario {
            params,
            unit: file.params.unit.clone(),
            initial: file.initial,
            phi,
            discarded_mass,
            n_max,
            schedule,
            outputs,
        })
    }
}
