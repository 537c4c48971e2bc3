use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("weight {index} is not strictly positive ({value}); use smoothing to accept zero entries")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite potentials after iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("exponent {exponent} overflows at entry ({row}, {col}); use the normalized path")]
    Overflow { row: usize, col: usize, exponent: f64 },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("{file}:{line}:{column}: {message}")]
    Parse {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Io(_) => 2,
            Error::Shape(_) => 3,
            Error::NonConvergence(_) | Error::NonFinite { .. } | Error::Overflow { .. } => 4,
            Error::Config(_) | Error::InvalidInput(_) | Error::NonPositiveWeight { .. } => 5,
        }
    }
}
