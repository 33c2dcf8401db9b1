use core::fmt;

/// Failures reported by the numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A coefficient profile or habitat failed construction-time checks.
    InvalidProfile(&'static str),
    /// A profile value left the declared `[b1, b2]` band.
    OutOfBounds { r: f64, value: f64 },
    /// A parameter violated its positivity / range constraint.
    InvalidParameter(&'static str),
    /// An eigen-iteration did not settle within its iteration cap.
    NonConvergence { iterations: usize },
    /// Initial data violates u₀'(0) = u₀(h₀) = 0, u₀ > 0 on [0, h₀).
    InvalidInitialData(&'static str),
    /// A time step produced a negative or unbounded profile.
    StabilityFailure { t: f64, dt: f64 },
    /// The fixed-ball steady state was requested with R₀ ≤ 1.
    BelowThreshold { r0: f64 },
    /// Newton failed to reduce the steady-state residual.
    NewtonDivergence { iterations: usize, residual: f64 },
    /// Too few samples for a regression.
    InsufficientData { samples: usize },
    /// A bisection could not find a sign change.
    BracketFailure(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidProfile(msg) => write!(f, "invalid profile: {msg}"),
            Error::OutOfBounds { r, value } => {
                write!(f, "profile value {value} at r = {r} outside [b1, b2]")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::NonConvergence { iterations } => {
                write!(f, "eigen-iteration did not converge after {iterations} iterations")
            }
            Error::InvalidInitialData(msg) => write!(f, "invalid initial data: {msg}"),
            Error::StabilityFailure { t, dt } => {
                write!(f, "time step unstable at t = {t} (dt = {dt})")
            }
            Error::BelowThreshold { r0 } => {
                write!(f, "no positive steady state: R0 = {r0} <= 1")
            }
            Error::NewtonDivergence { iterations, residual } => write!(
                f,
                "Newton iteration diverged after {iterations} iterations (residual {residual:e})"
            ),
            Error::InsufficientData { samples } => {
                write!(f, "insufficient data: {samples} samples")
            }
            Error::BracketFailure(msg) => write!(f, "bracket failure: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
