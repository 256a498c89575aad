use thiserror::Error;

use crate::model::SolverTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("incompatible shapes: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bisection did not converge; last bracket [{lo}, {hi}]")]
    Bisection { lo: f64, hi: f64 },

    #[error("objective became non-finite at iteration {iteration}")]
    Diverged {
        iteration: usize,
        trace: Box<SolverTrace>,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("fit level unreachable: best residual {achieved} exceeds alpha {alpha}")]
    FitUnreachable { achieved: f64, alpha: f64 },

    #[error("{what} = {value} outside supported range {min}..={max}")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn shape_err(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
