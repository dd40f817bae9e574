use thiserror::Error;

/// Errors surfaced by the library.
///
/// Singularity of an information-criterion objective is deliberately *not* an
/// `Error`: inadmissible subsets are a normal outcome of the subset scan and
/// are signalled through `Option` at the call site. `Error` is reserved for
/// misuse (shape mismatches, invalid configuration) and for pipeline failures
/// that a Monte Carlo driver counts and skips.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector dimensions do not match the operation's contract.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A symmetric-input operation received an asymmetric matrix.
    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,

    /// A positive-definite-input operation received a singular or indefinite
    /// matrix.
    #[error("matrix is singular or not positive definite")]
    NotPositiveDefinite,

    /// Invalid experiment or generator configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// The pooled CCE fit could not be computed for this draw.
    #[error("estimation failure: {0}")]
    Estimation(String),

    /// Every candidate subset was inadmissible for the requested criterion.
    #[error("selection failure: {0}")]
    Selection(String),
}
