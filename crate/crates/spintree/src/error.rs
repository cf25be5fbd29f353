use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("network has {0} nodes; full-space oracle supports at most {MAX_ORACLE_SPINS}")]
    UnsupportedSize(usize),

    #[error("norm {0:.3e} leaked outside the vacuum + single-excitation sector")]
    SectorLeak(f64),

    #[error("no perfect transfer: best amplitude modulus {0} below threshold")]
    NoPerfectTransfer(f64),

    #[error("bad label {0:?}: not in canonical form")]
    BadLabel(String),
}

/// Dense 2^N exponentiation is the oracle's only mode; beyond this it is unusable.
pub const MAX_ORACLE_SPINS: usize = 12;

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
