//! Error type shared by all solvers and diagnostics.

use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes of the solvers and checks.
///
/// Non-convergence of the outer fixed point is deliberately *not* an error:
/// the coupled system has no convergence guarantee, so the iteration reports
/// a flagged [`crate::MfgSolution`] instead. Errors here are either invalid
/// inputs or violations of properties the schemes are supposed to guarantee.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two fields that must share a grid do not.
    GridMismatch { context: &'static str },
    /// A parameter violates its domain constraint.
    Invalid { what: &'static str, why: String },
    /// The explicit part of a step would violate its monotonicity/CFL bound.
    Cfl { ratio: f64 },
    /// A linear system could not be solved to tolerance.
    LinearSolve { why: String },
    /// Pseudo-time marching did not reach a steady state within the cap.
    NonConvergence { residual: f64, elapsed: f64 },
    /// A discrete property the scheme guarantees was violated at runtime
    /// (positivity, mass monotonicity, barrier bounds). Indicates a bug or
    /// an unstable configuration, never a legitimate outcome.
    Scheme {
        what: &'static str,
        value: f64,
        bound: f64,
        time: f64,
    },
    /// A time series is unusable for the requested analysis.
    Series { why: String },
    /// The record does not cover the time window a check needs.
    HorizonTooShort { have: f64, need: f64 },
    /// The time span is not an integer number of steps.
    TimeGrid { span: f64, dt: f64 },
    /// The fixed point was configured with zero outer iterations.
    NotAttempted,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::GridMismatch { context } => write!(f, "grid mismatch in {context}"),
            Error::Invalid { what, why } => write!(f, "invalid {what}: {why}"),
            Error::Cfl { ratio } => {
                write!(f, "CFL violation: explicit-step ratio {ratio} exceeds 1")
            }
            Error::LinearSolve { why } => write!(f, "linear solve failed: {why}"),
            Error::NonConvergence { residual, elapsed } => write!(
                f,
                "pseudo-time marching did not converge: residual {residual} after t = {elapsed}"
            ),
            Error::Scheme {
                what,
                value,
                bound,
                time,
            } => write!(
                f,
                "scheme guarantee violated: {what} = {value} vs bound {bound} at t = {time}"
            ),
            Error::Series { why } => write!(f, "unusable series: {why}"),
            Error::HorizonTooShort { have, need } => {
                write!(f, "horizon too short: record ends at {have}, need {need}")
            }
            Error::TimeGrid { span, dt } => {
                write!(f, "time span {span} is not an integer multiple of dt = {dt}")
            }
            Error::NotAttempted => write!(f, "fixed point not attempted (max outer iterations 0)"),
        }
    }
}

impl core::error::Error for Error {}
