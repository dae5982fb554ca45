use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("signal has zero norm, relative ratio is undefined")]
    ZeroSignal,

    #[error("enumeration of {count} support pairs exceeds limit {limit}; use rho_alternating")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error("unsupported cone for this estimator: {0}")]
    UnsupportedCone(&'static str),

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("backward pass requires cached activations for {expected} layers, found {found}")]
    MissingActivations { expected: usize, found: usize },

    #[error("malformed PGM: {0}")]
    Pgm(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension {
            context,
            expected,
            found,
        });
    }
    Ok(())
}
