use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid site window: cut {cut} must lie in [1, {}] for {n_sites} sites", n_sites.saturating_sub(1))]
    InvalidWindow { n_sites: usize, cut: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized: |norm - 1| = {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not a projector: {reason}")]
    NotProjector { reason: String },

    /// An internal consistency check failed. These indicate a bug or a
    /// numerically corrupted state rather than bad user input.
    #[error("numerical fault in {context}: {detail}")]
    NumericalFault { context: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn fault(context: &'static str, detail: impl Into<String>) -> Self {
        Error::NumericalFault {
            context,
            detail: detail.into(),
        }
    }
}
