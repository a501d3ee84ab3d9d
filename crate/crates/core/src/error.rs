use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("eigenvalue iteration did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("decay certificate: {0}")]
    Certificate(String),

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("infeasible DoS budget: 1/T + delta/tau_D = {load} must be < 1")]
    InfeasibleBudget { load: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A synthesis precondition (spectral radius, zoom factor range) does not hold.
    #[error("synthesis precondition failed: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
