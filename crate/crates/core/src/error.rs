use thiserror::Error;

/// Errors raised by the library layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coupling constant lambda is zero; the mixing angle is undefined (use decoupled_mixing for the uncoupled limit)")]
    DecoupledSystem,

    #[error("coupling constant lambda must be non-negative, got {0}")]
    NegativeCoupling(f64),

    #[error("parameter `{field}` must be finite, got {value}")]
    NonFinite { field: &'static str, value: f64 },

    #[error("single-mode amplitude vector has zero norm")]
    ZeroVector,

    #[error("state needs {needed} total quanta but the truncation is n_max = {n_max}")]
    TruncationTooSmall { needed: usize, n_max: usize },

    #[error("frequency ratio (4m - N)/N is not positive for N = {n}, m = {m}")]
    NonPositiveRatio { n: usize, m: usize },

    #[error("symmetric eigensolver did not converge for block n_total = {0}")]
    EigenFailure(usize),

    #[error("state is not of the form |phi> (x) |0>: amplitude found with mode 2 occupied")]
    NotProductState,

    #[error("unknown verification suite `{0}` (expected one of: rotation, evolution, oracle, exchange)")]
    UnknownSuite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
