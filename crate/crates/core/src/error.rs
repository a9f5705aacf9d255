use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error(
        "integration failed at t = {time_ns} ns: trace drifted by {drift:e}; try a smaller step"
    )]
    IntegrationFailure { time_ns: f64, drift: f64 },

    #[error("invalid pulse sequence: {0}")]
    InvalidSequence(String),

    #[error("channel is not CPTP: {0}")]
    NonCptp(String),

    #[error("fit did not converge after {iterations} iterations (residual norm {residual_norm:e})")]
    FitNotConverged { iterations: usize, residual_norm: f64 },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("Lorentzian corner {corner_hz:.3} Hz lies outside the fitted band [{low_hz:.3}, {high_hz:.3}] Hz")]
    CornerOutsideBand {
        corner_hz: f64,
        low_hz: f64,
        high_hz: f64,
    },

    #[error("covariance matrix is singular")]
    SingularCovariance,

    #[error("no extremum found in the swept range")]
    NoExtremum,

    #[error("traces do not cross in the swept range")]
    NoCrossing,

    #[error("pseudo-Z deviates from Z by {distance:e} (tolerance {tolerance:e})")]
    PseudoZDeviation { distance: f64, tolerance: f64 },

    #[error("malformed trace data at {location}: {reason}")]
    TraceFormat { location: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Whether the error comes from a numerical procedure (integration, fit,
    /// calibration search) rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IntegrationFailure { .. }
                | Error::NonCptp(_)
                | Error::FitNotConverged { .. }
                | Error::FitFailure(_)
                | Error::CornerOutsideBand { .. }
                | Error::SingularCovariance
                | Error::NoExtremum
                | Error::NoCrossing
                | Error::PseudoZDeviation { .. }
        )
    }
}
