use thiserror::Error;

/// Errors raised by samplers, evaluators, zero finding and the experiment drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("truncation {truncation} exceeds the Nyquist limit {limit} of the grid")]
    Aliasing { truncation: usize, limit: usize },

    #[error("covariance of the untruncated field is infinite at zero separation")]
    Singularity,

    #[error("kernel is not positive semidefinite: minimum eigenvalue {min_eigenvalue:e} below -{tolerance:e}")]
    InvalidKernel { min_eigenvalue: f64, tolerance: f64 },

    #[error("scale {scale} is below the grid resolution {spacing}")]
    Resolution { scale: f64, spacing: f64 },

    #[error("mode {frequency} is outside the truncation range 1..={truncation}")]
    ModeOutOfRange { frequency: usize, truncation: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("moment of order {p} does not exist for gamma = {gamma} (requires p < 2/gamma^2)")]
    MomentUndefined { p: f64, gamma: f64 },

    #[error("contour at radius {radius} passes too close to a zero")]
    ContourDegenerate { radius: f64 },

    #[error("precision loss: {0}")]
    Precision(String),

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("quadrature produced a non-finite value: {0}")]
    Quadrature(String),

    #[error("eigenvalue {eigenvalue} is too close to the deficiency window around -1 (tolerance {tolerance:e})")]
    AmbiguousDeficiency { eigenvalue: f64, tolerance: f64 },

    #[error("no admissible trigonometric polynomial of degree {degree} satisfies {constraints} constraints")]
    DegreeTooSmall { degree: usize, constraints: usize },

    #[error("f1 and f2 share a zero (min of f1^2 + f2^2 is {a_inf:e}); retry with a larger degree")]
    CommonZero { a_inf: f64 },

    #[error("regression abscissas are degenerate")]
    DegenerateFit,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for the errors that stem from numerical trouble rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ContourDegenerate { .. }
                | Error::Precision(_)
                | Error::Consistency(_)
                | Error::Quadrature(_)
                | Error::AmbiguousDeficiency { .. }
                | Error::CommonZero { .. }
                | Error::InvalidKernel { .. }
        )
    }
}
