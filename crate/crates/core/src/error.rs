//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or adaptive quadrature failed to reach its tolerance
    /// within its budget.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// Every observation equals 1, so the Zeta likelihood increases
    /// monotonically in `s` and no finite maximizer exists.
    #[error("degenerate sample: all observations equal 1, the score equation has no finite root")]
    DegenerateSample,

    /// The root finder exhausted its bracket expansion budget.
    #[error("bracket error: {0}")]
    Bracket(String),

    /// A numeric invariant was violated (overflow, asymmetry, ...).
    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
