use thiserror::Error;

/// Errors raised by the model, discretization, solver and diagnostics layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KsError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid has {0} nodes, at least 3 are required")]
    InsufficientGrid(usize),

    #[error("non-finite value at node {index}")]
    NonFiniteField { index: usize },

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("w must be strictly positive, found {value:e} at node {index}")]
    NonPositiveW { index: usize, value: f64 },

    #[error("weight must be strictly positive, found {value:e} at node {index}")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error(
        "w = {value:e} at node {index} fell below the floor {floor:e}; \
         rerun with the uv (Cole-Hopf) formulation"
    )]
    WBelowFloor {
        index: usize,
        value: f64,
        floor: f64,
    },

    #[error("Courant number {cfl:.3} exceeds the stability limit")]
    CflViolation { cfl: f64 },
}

impl KsError {
    /// Variant name, for failure summaries.
    pub fn kind(&self) -> &'static str {
        match self {
            KsError::InvalidParameter { .. } => "InvalidParameter",
            KsError::InvalidGrid(_) => "InvalidGrid",
            KsError::InsufficientGrid(_) => "InsufficientGrid",
            KsError::NonFiniteField { .. } => "NonFiniteField",
            KsError::GridMismatch => "GridMismatch",
            KsError::NonPositiveW { .. } => "NonPositiveW",
            KsError::NonPositiveWeight { .. } => "NonPositiveWeight",
            KsError::PreconditionViolated(_) => "PreconditionViolated",
            KsError::WBelowFloor { .. } => "WBelowFloor",
            KsError::CflViolation { .. } => "CFLViolation",
        }
    }
}

pub type Result<T> = std::result::Result<T, KsError>;
