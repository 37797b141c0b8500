//! Error type shared by the numerical and simulation routines.

use std::fmt;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter was outside its documented domain.
    InvalidParameter(String),
    /// A root-finding bracket does not straddle a sign change.
    InvalidBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    /// Adaptive quadrature ran out of subdivisions before meeting the
    /// requested tolerance. Carries the best estimate and its error bound.
    QuadratureBudgetExhausted {
        context: String,
        estimate: f64,
        error_bound: f64,
    },
    /// The accelerated Fourier series behind a transform inversion did not
    /// settle. Carries the last estimate and the remainder of the
    /// acceleration.
    InversionDidNotConverge { estimate: f64, remainder: f64 },
    /// Exact marginal evaluation is only available for perfect cancellation.
    ResidualInterferenceUnsupported { xi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::InvalidBracket { lo, hi, f_lo, f_hi } => write!(
                f,
                "invalid bracket [{lo}, {hi}]: f values ({f_lo}, {f_hi}) do not straddle zero"
            ),
            Error::QuadratureBudgetExhausted {
                context,
                estimate,
                error_bound,
            } => write!(
                f,
                "quadrature budget exhausted ({context}): estimate {estimate} with error bound {error_bound}"
            ),
            Error::InversionDidNotConverge { estimate, remainder } => write!(
                f,
                "inversion failed to converge: estimate {estimate} with remainder {remainder}"
            ),
            Error::ResidualInterferenceUnsupported { xi } => write!(
                f,
                "exact inversion unsupported for xi>0 (xi = {xi}); use montecarlo"
            ),
        }
    }
}

impl std::error::Error for Error {}
