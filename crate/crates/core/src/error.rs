use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the set on which the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An argument lies outside the window where a closed form is valid.
    #[error("{what} = {value} is outside the validity window [{lo}, {hi})")]
    Range {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// An iterative method did not converge; carries the last bracket.
    #[error("no convergence after {iterations} iterations, last bracket [{lo}, {hi}]")]
    NoConvergence { iterations: usize, lo: f64, hi: f64 },

    /// The supplied interval does not bracket a sign change.
    #[error("no sign change on [{lo}, {hi}] (f = {flo}, {fhi})")]
    NoSignChange { lo: f64, hi: f64, flo: f64, fhi: f64 },

    /// The secant through (lambda, e^lambda) is undefined.
    #[error("degenerate secant: x1 equals lambda = {0}")]
    DegenerateSecant(f64),

    /// A precondition of a verification routine does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Exhaustive search failed to produce a certificate.
    #[error("search failed: {0}")]
    SearchFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
