use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The caller supplied malformed or out-of-range input.
    Input,
    /// The input was well formed but a numerical procedure failed.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("stability check failed: drift is not stable (spectral abscissa {abscissa:.6e})")]
    Unstable { abscissa: f64 },

    #[error("invalid unravelling: {0}")]
    InvalidUnravelling(String),

    #[error("Riccati solver did not converge (residual {residual:.3e} after {steps} steps)")]
    NoConvergence { residual: f64, steps: usize },

    #[error("solution is unphysical (uncertainty margin {margin:.3e})")]
    Unphysical { margin: f64 },

    #[error("target covariance is not stabilising (margin {margin:.3e})")]
    NotStabilising { margin: f64 },

    #[error("no positive semidefinite unravelling reproduces the target (residual {residual:.3e})")]
    NoPsdSolution { residual: f64 },

    #[error("non-finite state in trajectory {trajectory} at step {step}")]
    NonFinite { trajectory: usize, step: usize },

    #[error("averaging window contains no samples")]
    EmptyWindow,

    #[error("no sign change of the target function on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("singular linear system in {0}")]
    Singular(&'static str),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Dimension(_)
            | Error::NotSymmetric(_)
            | Error::InvalidParameter(_)
            | Error::InvalidUnravelling(_)
            | Error::EmptyWindow => ErrorKind::Input,
            _ => ErrorKind::Numerical,
        }
    }
}
