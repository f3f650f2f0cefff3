use thiserror::Error;

/// Errors raised by the library. Each variant maps onto one CLI exit code
/// class (configuration, numerical budget, schema).
#[derive(Debug, Error)]
pub enum FracError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid fractional order {value}: must lie strictly inside (0, 1)")]
    InvalidOrder { value: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("field error: {0}")]
    Field(String),

    #[error("field has no declared support radius; compact support is required")]
    MissingSupport,

    #[error("divergent configuration: {0}")]
    Divergent(String),

    #[error("quadrature budget exceeded: {0}")]
    Budget(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("schema version mismatch: expected {expected}, found {found}")]
    Schema { expected: u32, found: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FracError>;
