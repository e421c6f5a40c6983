use thiserror::Error;

/// Errors raised by mesh construction, assembly, solving and the study drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("singular saddle system (smallest pivot {pivot:.3e}): {detail}")]
    SingularSystem { pivot: f64, detail: String },

    #[error("solver did not reach tolerance: {0}")]
    Stagnation(String),

    #[error("failed to parse mesh file at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
