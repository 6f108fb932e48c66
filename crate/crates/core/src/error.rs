use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum VemError {
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("mesh schema error{}: {msg}", cell.map(|c| format!(" in cell {c}")).unwrap_or_default())]
    Schema { cell: Option<usize>, msg: String },

    #[error("mesh connectivity error: {0}")]
    Connectivity(String),

    #[error("singular projector Gram matrix (condition estimate {condition:.3e})")]
    SingularGram { condition: f64 },

    #[error("unsupported quadrature degree {0}")]
    UnsupportedDegree(usize),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("rank error: expected rank {expected}, found {found}")]
    Rank { expected: usize, found: usize },

    #[error("restricted Gram matrix is not positive definite")]
    IndefiniteGram,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, VemError>;
