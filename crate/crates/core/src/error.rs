use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("body is not convex: midpoint {0:?} of a boundary chord lies outside")]
    NotConvex(Vec<f64>),
    #[error("radial function is not positive (min {0})")]
    NotStarShaped(f64),
    #[error("non-positive mean curvature {value} at {location:?}")]
    NonPositiveCurvature { value: f64, location: Vec<f64> },
    #[error("resolution {0} out of range")]
    Resolution(usize),
    #[error("box radius {radius} too small (need at least {required})")]
    BoxTooSmall { radius: f64, required: f64 },
    #[error("solver did not converge after {iterations} iterations (relative decrement {decrement:e})")]
    NonConvergence { iterations: usize, decrement: f64 },
    #[error("level set t={0} touches the truncation boundary")]
    LevelSetTouchesBoundary(f64),
    #[error("extrapolation residual {0} too large")]
    Extrapolation(f64),
    #[error("time step {dt} exceeds stability bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("radius blow-up: {0} exceeds configured bound")]
    BlowUp(f64),
    #[error("trace too short: tail carries {0:.3} of the integral")]
    TraceTooShort(f64),
    #[error("missing ingredient: {0}")]
    Missing(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, CapError>;

impl From<std::io::Error> for CapError {
    fn from(e: std::io::Error) -> Self {
        CapError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CapError {
    fn from(e: serde_json::Error) -> Self {
        CapError::Parse(e.to_string())
    }
}
