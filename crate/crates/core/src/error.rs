use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("domain size {0} must be even and at least 2")]
    InvalidDomain(usize),

    #[error("value {value} outside [0, {bound})")]
    OutOfRange { value: usize, bound: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("enumeration budget exceeded: {0} assignments")]
    BudgetExceeded(u128),

    #[error("arithmetic overflow: {0}")]
    Overflow(&'static str),

    #[error("infeasible input: {family} residual {residual:e} exceeds {tolerance:e}")]
    Infeasible {
        family: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
