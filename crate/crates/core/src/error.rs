use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NlsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("size mismatch: expected {expected} samples, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("invalid equation parameters: {0}")]
    InvalidParams(String),

    #[error("domain escape: {0}")]
    DomainEscape(String),

    #[error("cutoff constraint `{constraint}` violated by {violation:.3e} at r = {r:.6}")]
    ConstraintViolation {
        constraint: &'static str,
        r: f64,
        violation: f64,
    },

    #[error("cutoff shooting failed: {0}")]
    ShootingFailure(String),

    #[error("ground state solver did not converge after {iterations} iterations (last change {change:.3e})")]
    NonConvergence { iterations: usize, change: f64 },

    #[error("ground state iteration collapsed to zero")]
    CollapsedToZero,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("Galilean boost {0:?} is not a lattice wavenumber of the grid")]
    NonLatticeBoost(Vec<f64>),
}

pub type Result<T> = std::result::Result<T, NlsError>;
