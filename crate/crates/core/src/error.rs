use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("time {time} is outside the admissible range [{lower}, {upper}]")]
    TimeOutOfRange { time: f64, lower: f64, upper: f64 },

    #[error("time {0} is not a node of the grid")]
    NotOnGrid(f64),

    #[error(
        "grid too coarse at node {node} (t = {time}): update denominator {denominator} is not positive"
    )]
    GridTooCoarse {
        node: usize,
        time: f64,
        denominator: f64,
    },

    #[error(
        "fixed-point iteration did not converge at node {node} (t = {time}) after {iterations} iterations: last iterate {last}, relative change {residual}"
    )]
    NonConvergence {
        node: usize,
        time: f64,
        iterations: usize,
        last: f64,
        residual: f64,
    },

    #[error("degenerate volatility estimate: {0}")]
    DegenerateEstimate(String),

    #[error("empty cohort: no option has pinning deviance below {0}")]
    EmptyCohort(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
