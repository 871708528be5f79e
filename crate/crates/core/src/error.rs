use thiserror::Error;

use crate::profile::ProfileSolution;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid exponent m = {0}: must lie in (0, 1)")]
    InvalidExponent(f64),

    #[error("inadmissible coefficient: {0}")]
    InadmissibleCoefficient(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("balls on radial grids must be centred at the origin (got x0 = {0})")]
    CenterUnsupported(f64),

    #[error("radius {rho} out of range (must lie in (0, {limit}))")]
    OutOfRange { rho: f64, limit: f64 },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("eigenvalue iteration did not converge after {0} iterations")]
    ConvergenceFailure(usize),

    #[error("singular operator: zero pivot in column {0}")]
    SingularOperator(usize),

    #[error(
        "profile iteration did not converge: residual {:.3e} after {} iterations",
        .0.residual_norm,
        .0.iterations
    )]
    NonConvergence(Box<ProfileSolution>),

    #[error("time must be positive (got {0})")]
    NonpositiveTime(f64),

    #[error("implicit-midpoint inner iteration failed at t = {t} after {iterations} iterations")]
    InnerNonConvergence { t: f64, iterations: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("malformed field file: {0}")]
    Parse(String),
}
