use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),

    /// Long-time probes of the evolution did not settle.
    #[error("steady state did not converge: probes at t={t} and t={t2} differ by {gap:e} (first {first:?}, second {second:?})", t2 = 2.0 * t)]
    SteadyStateNonConvergence {
        t: f64,
        gap: f64,
        first: Vec<f64>,
        second: Vec<f64>,
    },

    /// Fixed-point iteration hit its iteration cap.
    #[error("fixed-point iteration did not converge after {iterations} iterations (last sup-norm delta {last_delta:e})")]
    NonConvergence { iterations: usize, last_delta: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("observation {y} has zero probability under belief pi(1)={pi1}")]
    ImpossibleObservation { y: usize, pi1: f64 },

    #[error("action {action} has zero probability under belief pi(1)={pi1}")]
    ImpossibleAction { action: usize, pi1: f64 },

    #[error("episode exceeded the step cap of {cap}")]
    RunawayEpisode { cap: usize },

    /// A steady-state failure while building the action kernel, annotated
    /// with the grid belief and observation being processed.
    #[error("kernel construction failed at pi(1)={pi1}, y={y}: {source}")]
    Kernel {
        pi1: f64,
        y: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed table: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SteadyStateNonConvergence { .. }
            | Error::NonConvergence { .. }
            | Error::NumericalFailure(_)
            | Error::ImpossibleObservation { .. }
            | Error::ImpossibleAction { .. }
            | Error::RunawayEpisode { .. }
            | Error::Infeasible => true,
            Error::Kernel { source, .. } => source.is_numerical(),
            Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::UnsupportedParameter(_)
            | Error::Io(_)
            | Error::Parse(_) => false,
        }
    }
}
