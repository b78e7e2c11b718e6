use thiserror::Error;

/// Failures reported by the metric routes and their building blocks.
///
/// Variants split into two families: validation failures (bad input
/// shape or values) and conditioning failures (the input is valid but a
/// route cannot be evaluated reliably). [`Error::is_conditioning`] tells
/// them apart; the CLI maps them to different exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is empty")]
    Empty,

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: asymmetry {asymmetry:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("matrix is not positive definite: factorization pivot {pivot} is {value:.3e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("state is singular: k_n = 0")]
    SingularState,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} is numerically singular (condition estimate {condition:.3e})")]
    IllConditioned { what: &'static str, condition: f64 },

    #[error("coefficient routes disagree: deviation {deviation:.3e} exceeds {tolerance:.3e}")]
    RouteDisagreement { deviation: f64, tolerance: f64 },

    #[error("{location}: {message}")]
    Format { location: String, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("state is not generic: rcond of scaled P {rcond:.3e} <= threshold {threshold:.3e}")]
    NotGeneric { rcond: f64, threshold: f64 },
}

impl Error {
    /// True for errors raised on valid input that a route cannot handle.
    pub fn is_conditioning(&self) -> bool {
        matches!(
            self,
            Error::IllConditioned { .. }
                | Error::NotGeneric { .. }
                | Error::SingularState
                | Error::RouteDisagreement { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
