use thiserror::Error;

/// Errors raised by grids, operators and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field values must be finite (first bad node {index}, value {value})")]
    NonFiniteField { index: usize, value: f64 },

    #[error("field has {got} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("grid is not symmetric about the origin: [{t_min}, {t_max}] with {n_points} nodes")]
    AsymmetricGrid { t_min: f64, t_max: f64, n_points: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("convolution produced a non-finite value at node {index}")]
    NonFiniteOutput { index: usize },

    #[error("solver stopped: {0}")]
    Solver(crate::solvers::Termination),

    #[error("bisection bracket [{lo}, {hi}] does not change the predicate (both ends {value})")]
    DegenerateBracket { lo: f64, hi: f64, value: bool },

    #[error("Newton iteration did not converge after {iterations} steps (|f| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("derivative vanished at Omega = {re} + {im}i")]
    DegenerateDerivative { re: f64, im: f64 },

    #[error("need at least 5 positive step differences, got {0}")]
    TooFewSamples(usize),

    #[error("sample point t = {0} lies outside the source grid")]
    OutsideGrid(f64),

    #[error("oscillator trajectory left the bounded region (|chi| = {0})")]
    Unbounded(f64),

    #[error("solution is not in the periodic regime: {0}")]
    NotPeriodic(String),

    #[error("i/o failure: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
