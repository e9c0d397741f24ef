use thiserror::Error;

/// Errors raised by the solvers, diagnostics and front end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("stencil of order {order} needs at least {needed} points, grid has {have}")]
    StencilUnderflow {
        order: usize,
        needed: usize,
        have: usize,
    },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("density {min:e} at x = {x} is at or below the vacuum floor {floor:e}")]
    Vacuum { min: f64, x: f64, floor: f64 },

    #[error("negative density {0}")]
    NegativeDensity(f64),

    #[error("weight function is negative ({0:e}) on the grid")]
    NegativeWeight(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical instability at t = {t}")]
    Instability { t: f64 },

    #[error("pressure law assumption failed: {0}")]
    Assumption(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
