//! Error type shared by the integrator and the solvers.

use std::fmt;

/// Errors produced by the integrator and the solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Model parameters violate their constraints.
    InvalidParams(String),
    /// A compartment state violates positivity or the unit-mass constraint.
    InvalidState(String),
    /// A control description is inadmissible.
    InvalidControl(String),
    /// A control breakpoint cannot be placed on the integration grid.
    GridMismatch { breakpoint: f64, dt: f64 },
    /// The integrator produced a non-finite value (step size too large).
    IntegrationFailure { t: f64 },
    /// An argument lies outside a function's mathematical domain.
    Domain(String),
    /// A documented precondition of the called solver does not hold.
    Precondition(String),
    /// A bracketing root solve found no sign change over `[lo, hi]`.
    BracketFailure { lo: f64, hi: f64 },
    /// The infected fraction underflowed on the lockdown window, so the
    /// switching quadrature is meaningless. The closed-form cost route does
    /// not suffer from this; prefer it for very long horizons.
    InfectedUnderflow { t: f64 },
    /// The requested distance from the herd threshold cannot be reached
    /// with the given lockdown intensity.
    UnreachableTarget { alpha: f64, alpha_bar: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::InvalidState(msg) => write!(f, "invalid state: {msg}"),
            Error::InvalidControl(msg) => write!(f, "invalid control: {msg}"),
            Error::GridMismatch { breakpoint, dt } => write!(
                f,
                "control breakpoint {breakpoint} not representable on a grid of step {dt}"
            ),
            Error::IntegrationFailure { t } => {
                write!(f, "integration produced a non-finite state near t = {t}")
            }
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::BracketFailure { lo, hi } => {
                write!(f, "no sign change over bracket [{lo}, {hi}]")
            }
            Error::InfectedUnderflow { t } => write!(
                f,
                "infected fraction underflowed near t = {t}; switching quadrature is \
                 ill-conditioned (use the closed-form cost instead)"
            ),
            Error::UnreachableTarget { alpha, alpha_bar } => write!(
                f,
                "lockdown level {alpha} exceeds the reachability threshold {alpha_bar}; \
                 the target distance from the herd threshold is unreachable"
            ),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
