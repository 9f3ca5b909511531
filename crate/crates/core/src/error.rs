use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("weak value diverges: pre- and post-selected states are orthogonal (|<psi_f|psi_i>| = {overlap:e})")]
    DivergentWeakValue { overlap: f64 },

    #[error("meter model requires a real weak value, got imaginary part {imag:e}")]
    UnsupportedImaginary { imag: f64 },

    #[error("post-selection probability {probability:e} is too small to condition on")]
    VanishingPostselection { probability: f64 },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("insufficient counts: {0}")]
    InsufficientCounts(String),

    #[error("no real weak value reproduces centroid {centroid} within the search bracket")]
    InversionFailure { centroid: f64 },

    #[error("degenerate validity region: {0}")]
    DegenerateRegion(String),

    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
