use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors raised across the estimator, rate, and bound code paths.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A distribution or model parameter is outside its admissible range.
    Parameter(String),
    /// Inputs fall outside the domain of a formula (e.g. `m <= 1`).
    Domain(String),
    /// Mismatched dimensions between a model and its inputs.
    Shape { expected: usize, found: usize },
    /// A covariate lies outside the declared support.
    OutOfSupport(String),
    /// Non-finite or otherwise unusable data.
    Data(String),
    /// An unsupported combination of sieve, loss or plan settings.
    Config(String),
    /// A theorem precondition does not hold.
    Precondition(String),
    /// A covering integral diverges at the origin.
    Integrability { exponent: f64, advice: String },
    /// Adaptive quadrature did not reach the requested tolerance.
    Quadrature { interval: (f64, f64), estimate: f64, error: f64 },
    /// The localization map never crossed `tau / 4` on the sampled range.
    Infeasible { profile: Vec<(f64, f64)> },
    /// Training produced a non-finite loss.
    Training { epoch: usize, step: usize, loss: f64 },
    /// Degenerate input to a fit (zero errors, too few points).
    Degenerate(String),
    /// A plan failed validation.
    Validation(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter(msg) => write!(f, "parameter error: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Shape { expected, found } => {
                write!(f, "shape error: expected dimension {expected}, found {found}")
            }
            Error::OutOfSupport(msg) => write!(f, "covariate outside support: {msg}"),
            Error::Data(msg) => write!(f, "data error: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::Integrability { exponent, advice } => {
                write!(f, "covering integral diverges at 0 (integrand exponent {exponent:.4} <= -1); {advice}")
            }
            Error::Quadrature { interval, estimate, error } => write!(
                f,
                "quadrature did not converge on [{:e}, {:e}]: estimate {estimate:e}, error {error:e}",
                interval.0, interval.1
            ),
            Error::Infeasible { profile } => {
                write!(f, "no crossing of tau/4 found over {} sampled points", profile.len())
            }
            Error::Training { epoch, step, loss } => {
                write!(f, "training diverged at epoch {epoch}, step {step}: loss {loss}")
            }
            Error::Degenerate(msg) => write!(f, "degenerate fit: {msg}"),
            Error::Validation(msg) => write!(f, "plan validation failed: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
