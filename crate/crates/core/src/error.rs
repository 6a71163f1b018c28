use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("density is not normalized: integral is {integral}")]
    Unnormalized { integral: f64 },

    #[error("observation set is empty")]
    EmptyObservations,

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("estimator configuration has no prior bounds")]
    MissingPriorBounds,

    #[error("malformed row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
