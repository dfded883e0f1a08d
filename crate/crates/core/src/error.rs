use thiserror::Error;

/// Errors raised by the library. Every variant carries enough context to
/// reproduce the failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interaction law: {0}")]
    InvalidLaw(String),

    #[error("law spec parse error in `{spec}`: {reason}")]
    LawSpec { spec: String, reason: String },

    #[error("scale factor diverges: {0}")]
    DivergentScaleFactor(String),

    #[error("operation requires a piecewise-constant law, got {0}")]
    NotPiecewiseConstant(String),

    #[error("invalid step function: {0}")]
    InvalidStepFunction(String),

    #[error("truncation bounds must satisfy A < B (got A={lower}, B={upper})")]
    InvalidTruncation { lower: f64, upper: f64 },

    #[error("step function is not nondecreasing: value {next} follows {prev} at x={at}")]
    NotMonotone { at: f64, prev: f64, next: f64 },

    #[error("value {value} is off the lattice {delta}Z")]
    OffLattice { value: f64, delta: f64 },

    #[error("invalid interval ({lo}, {hi})")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("intervals ({a1}, {a2}) and ({b1}, {b2}) overlap")]
    OverlappingIntervals { a1: f64, a2: f64, b1: f64, b2: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length tuple leaves D(n={n}, k={k}): window starting at {index} sums to zero")]
    OutsideDomain { n: usize, k: usize, index: usize },

    #[error("window length {k} exceeds tuple length {n}")]
    WindowTooLong { n: usize, k: usize },

    #[error("quadrature did not converge within {evals} evaluations (error estimate {error:e})")]
    QuadratureBudget { evals: usize, error: f64 },

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("I/O or format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
