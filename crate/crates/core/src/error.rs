use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("condition violated: {0}")]
    ConditionViolation(String),

    #[error("quadrature did not converge: {what} (last change {change:e})")]
    NoConvergence { what: String, change: f64 },

    #[error(
        "loss of orthogonality in recurrence: residual {residual:e} after precision escalation"
    )]
    LossOfOrthogonality { residual: f64 },

    #[error("ill-conditioned matrix: condition estimate {condition:e}")]
    IllConditioned { condition: f64 },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("odd ensemble size n = {0} is not supported for beta = 1")]
    OddSize(usize),

    #[error("kernel bundle is already edge-scaled")]
    AlreadyScaled,

    #[error("determinant sign defect: det = {0:e}")]
    NegativeDeterminant(f64),

    #[error("truncation tail {0:e} exceeds tolerance")]
    TailTooLarge(f64),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
