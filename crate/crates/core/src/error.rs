use thiserror::Error;

/// Errors surfaced by construction and evaluation routines.
///
/// Quadrature budget problems are *not* errors: integrators return a
/// [`crate::quad::ValueWithError`] whose status records whether the
/// requested tolerance was met.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The gauge vanishes along some direction, so the body is unbounded
    /// there and has no finite radial function.
    #[error("unbounded body: gauge vanishes in direction {direction:?}")]
    UnboundedBody { direction: Vec<f64> },

    #[error("degenerate density: {0}")]
    DegenerateDensity(String),

    #[error("witness rejected: {0}")]
    WitnessRejected(String),

    #[error("spec parse error: {0}")]
    Spec(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn check_dim(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got })
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
