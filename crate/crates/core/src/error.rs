//! Error type shared by every module of the crate.

use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong while evaluating or optimizing a
/// programming scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input fell outside its documented domain. The message names the
    /// violated precondition.
    Domain(&'static str),
    /// The expected number of attempts diverges (retry-until-success while
    /// every attempt fails with certainty).
    DivergentDelay,
    /// The cumulative failure series diverges (unit tail probability with
    /// positive mass reaching the tail).
    DivergentSeries,
    /// The requested closed form does not cover this channel kind.
    UnsupportedChannel(&'static str),
    /// A scheme part carries parameters that do not fit the channel it is
    /// evaluated on (a missing or stray `alpha`/`q`).
    SchemeChannelMismatch(&'static str),
    /// The part list does not describe a valid mixture scheme.
    InvalidScheme(&'static str),
    /// Root bracketing failed: no sign change on the search interval.
    NoRoot(&'static str),
    /// An iterative solver stopped before reaching its tolerance.
    NonConvergence { iterations: u32, gap: f64 },
    /// A transition matrix failed validation.
    InvalidMatrix(&'static str),
    /// The envelope optimizer received no points.
    EmptyInput,
    /// A grid point beat the solver by more than the allowed tolerance.
    Counterexample {
        description: String,
        solver_value: f64,
        grid_value: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::DivergentDelay => write!(
                f,
                "divergent delay: retry-until-success never terminates when every attempt fails"
            ),
            Error::DivergentSeries => write!(
                f,
                "divergent series: the failure-probability tail is 1 and positive mass reaches it"
            ),
            Error::UnsupportedChannel(what) => write!(f, "unsupported channel: {what}"),
            Error::SchemeChannelMismatch(what) => write!(f, "scheme/channel mismatch: {what}"),
            Error::InvalidScheme(what) => write!(f, "invalid scheme: {what}"),
            Error::NoRoot(what) => write!(f, "no root: {what}"),
            Error::NonConvergence { iterations, gap } => write!(
                f,
                "no convergence after {iterations} iterations (duality gap {gap:.3e})"
            ),
            Error::InvalidMatrix(what) => write!(f, "invalid matrix: {what}"),
            Error::EmptyInput => write!(f, "empty input"),
            Error::Counterexample {
                description,
                solver_value,
                grid_value,
            } => write!(
                f,
                "counterexample: {description} reaches {grid_value:.12} but the solver reports {solver_value:.12}"
            ),
        }
    }
}

impl core::error::Error for Error {}
