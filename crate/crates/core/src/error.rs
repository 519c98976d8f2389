use thiserror::Error;

/// Errors raised across the library.
///
/// The variants follow the failure classes of the public operations: bad
/// caller input (`Domain`, `Parameter`, `Usage`), malformed data
/// (`Parse`, `Structure`), and numerical breakdown (`Numerical`,
/// `Calibration`, `InclusionViolation`).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {0:?} lies outside the domain")]
    Domain([f64; 3]),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("structural mesh error: {0}")]
    Structure(String),

    #[error("sample point {point:?} left the domain (x = {origin:?}); shrink radius misconfigured")]
    InclusionViolation { origin: [f64; 3], point: [f64; 3] },

    #[error("point {0:?} is not covered by the mesh")]
    Evaluation([f64; 3]),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("epsilon calibration failed after {halvings} halvings; norm history {history:?}")]
    Calibration { halvings: usize, history: Vec<(f64, f64)> },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
