use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("derivative order ({0}, {1}) exceeds the supported total of 4")]
    DerivativeOrder(u32, u32),

    #[error("negative-order homogeneous norm requested for a field with nonzero mean (|mean mode| = {mean:e}, norm = {norm:e})")]
    NonzeroMean { mean: f64, norm: f64 },

    #[error("parameter constraint violated: {constraint} (got {value})")]
    Constraint { constraint: &'static str, value: f64 },

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("box too small: {0}")]
    BoxTooSmall(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fit rejected: {0}")]
    Fit(String),

    #[error("quadrature did not converge: relative change {change:e} exceeds {tolerance:e}")]
    Quadrature { change: f64, tolerance: f64 },

    #[error("time mismatch: state at t = {state}, reference at t = {reference}")]
    TimeMismatch { state: f64, reference: f64 },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("parse error: {0}")]
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

pub type Result<T> = std::result::Result<T, Error>;
