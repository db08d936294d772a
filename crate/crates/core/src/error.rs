use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure classes shared by every module. The CLI maps them onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("boundary matrix rows are linearly dependent (all 2x2 minors vanish)")]
    DependentRows,

    #[error("boundary conditions are not regular: A14*A23 = 0")]
    NotRegular,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("tolerance {requested:e} unreachable within {steps} steps (achieved {achieved:e})")]
    ToleranceUnreachable {
        requested: f64,
        achieved: f64,
        steps: usize,
    },

    #[error("lambda = {0} is within pole distance of the spectrum (|Delta| = {1:e})")]
    PoleProximity(num_complex::Complex64, f64),

    #[error("kernel is not numerically rank one (sigma2/sigma1 = {0:e})")]
    NotRankOne(f64),

    #[error("degenerate eigenvector: both coefficients vanish at lambda = {0}")]
    DegenerateEigenvector(num_complex::Complex64),

    #[error("near-degenerate pairing: |int y1 y2| = {0:e}")]
    DegeneratePairing(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("certified bound failed: {0}")]
    BoundFailed(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
