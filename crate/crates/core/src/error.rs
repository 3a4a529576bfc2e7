use thiserror::Error;

#[derive(Debug, Error)]
pub enum CdError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("lattice has {requested} points, the cap is {cap}")]
    SizeCap { requested: usize, cap: usize },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("no certified rho1 in the bracket [{lo}, {hi}]")]
    NoCertifiedRho1 { lo: f64, hi: f64 },

    #[error("regime mismatch: {0}")]
    Regime(String),

    #[error("optimizer failed to reach the endpoint (residual {residual:.3e})")]
    Optimizer { residual: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("sample budget exhausted: {0}")]
    SampleBudget(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CdError>;
